#include "mantensor/correction.hpp"

#include <cmath>

#include "mantensor/parallel.hpp"

namespace mantensor {

namespace {
using Eigen::MatrixXd;
using Eigen::VectorXd;
}  // namespace

double beta(double kappa) {
  if (std::abs(kappa) < 1e-6) {
    // sin(sqrt(k))/sqrt(k) expanded in k; the same series continues the
    // hyperbolic branch for negative arguments.
    return 1.0 + kappa * (-1.0 / 6.0 +
                          kappa * (1.0 / 120.0 - kappa / 5040.0));
  }
  if (kappa > 0.0) {
    double s = std::sqrt(kappa);
    return std::sin(s) / s;
  }
  double s = std::sqrt(-kappa);
  return std::sinh(s) / s;
}

double CurvatureSystem::kappa_max() const {
  return kappas.size() > 0 ? kappas.maxCoeff() : 0.0;
}

double CurvatureSystem::kappa_min() const {
  return kappas.size() > 0 ? kappas.minCoeff() : 0.0;
}

CurvatureSystem build_curvature_system(const BaseContext& base,
                                       const TangentTensor& logs) {
  if (!(logs.base.manifold == base.manifold()))
    throw DimensionMismatchError("tangent manifold does not match base point");
  const std::int64_t m = logs.num_entries();
  const int d = base.dim();
  CurvatureSystem sys;
  sys.kappas.resize(m, d);
  sys.thetas.resize(m);
  sys.thetas_metric.resize(m);
  parallel_for(m, [&](std::int64_t e) {
    CurvatureEigenbasis eb =
        base.curvature_eigenbasis(logs.coords.row(e).transpose());
    sys.kappas.row(e) = eb.kappas.transpose();
    sys.thetas_metric[e] = base.metric_rows(eb.thetas);
    sys.thetas[e] = std::move(eb.thetas);
  });
  return sys;
}

CurvatureSystem build_curvature_system(const ManifoldPoint& p,
                                       const MvTensor& t) {
  BaseContext base(p);
  return build_curvature_system(base, log_tensor(base, t));
}

Eigen::MatrixXd frame_coefficients(const BaseContext& base,
                                   const TangentTensor& x,
                                   const CurvatureSystem& sys) {
  const std::int64_t m = x.num_entries();
  if (static_cast<std::int64_t>(sys.thetas.size()) != m)
    throw DimensionMismatchError("curvature system does not match tensor");
  MatrixXd w = base.metric_rows(x.coords);
  MatrixXd c(m, base.dim());
  for (std::int64_t e = 0; e < m; ++e)
    c.row(e) = (sys.thetas_metric[e] * w.row(e).transpose()).transpose();
  return c;
}

double cc_loss(const BaseContext& base, const TangentTensor& xi,
               const TangentTensor& logs, const CurvatureSystem& sys) {
  if (xi.shape != logs.shape)
    throw DimensionMismatchError("tangent tensors are not aligned");
  TangentTensor diff = xi;
  diff.coords -= logs.coords;
  MatrixXd c = frame_coefficients(base, diff, sys);
  double total = 0.0;
  for (Eigen::Index e = 0; e < c.rows(); ++e)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double b = beta(sys.kappas(e, j));
      total += b * b * c(e, j) * c(e, j);
    }
  return total;
}

double cc_loss(const TangentTensor& xi, const MvTensor& t,
               const CurvatureSystem& sys) {
  BaseContext base(xi.base);
  return cc_loss(base, xi, log_tensor(base, t), sys);
}

Eigen::MatrixXd BFactors::dense() const {
  const std::int64_t m = kron.rows();
  const std::int64_t rp = kron.cols();
  MatrixXd out(m * d, rp * d);
  for (std::int64_t e = 0; e < m; ++e)
    for (int j = 0; j < d; ++j)
      for (std::int64_t c = 0; c < rp; ++c)
        for (int i = 0; i < d; ++i)
          out(e * d + j, c * d + i) = kron(e, c) * phi_theta[e](j, i);
  return out;
}

BFactors build_B(const BaseContext& base,
                 const std::vector<Eigen::MatrixXd>& factors,
                 const Eigen::MatrixXd& phi, const CurvatureSystem& sys) {
  BFactors b;
  b.d = base.dim();
  if (phi.rows() != b.d || phi.cols() != base.embedding_dim())
    throw DimensionMismatchError("phi must be a full tangent basis");
  for (const MatrixXd& u : factors) {
    b.data_shape.push_back(static_cast<int>(u.rows()));
    b.ranks.push_back(static_cast<int>(u.cols()));
  }
  const std::int64_t m = shape_num_entries(b.data_shape);
  if (static_cast<std::int64_t>(sys.thetas.size()) != m)
    throw DimensionMismatchError("curvature system does not match factors");

  b.kron = kronecker_product(factors);

  MatrixXd wphi = base.metric_rows(phi);
  b.phi_theta.resize(m);
  parallel_for(m, [&](std::int64_t e) {
    b.phi_theta[e] = sys.thetas_metric[e] * wphi.transpose();
  });
  return b;
}

Eigen::VectorXd NormalSystem::apply(const Eigen::VectorXd& v) const {
  const std::int64_t m = b.kron.rows();
  const std::int64_t rp = b.kron.cols();
  const int d = b.d;
  if (v.size() != rp * d)
    throw DimensionMismatchError("vector does not match system side");
  // b_dense rows carry the beta weights, so A v is two plain passes.
  if (b_dense.size() > 0) return b_dense.transpose() * (b_dense * v);
  Eigen::Map<const MatrixXd> vm(v.data(), d, rp);  // column c holds V(c, :)
  MatrixXd w1 = b.kron * vm.transpose();           // entries x d
  MatrixXd w2(m, d);
  for (std::int64_t e = 0; e < m; ++e) {
    VectorXd s = b.phi_theta[e] * w1.row(e).transpose();
    s.array() *= beta_sq.row(e).transpose().array();
    w2.row(e) = (b.phi_theta[e].transpose() * s).transpose();
  }
  MatrixXd out = b.kron.transpose() * w2;  // rp x d
  VectorXd flat(rp * d);
  for (std::int64_t c = 0; c < rp; ++c)
    flat.segment(c * d, d) = out.row(c).transpose();
  return flat;
}

NormalSystem build_normal_system(const BFactors& b, const CurvatureSystem& sys,
                                 const Eigen::MatrixXd& log_coeffs) {
  const std::int64_t m = b.kron.rows();
  const std::int64_t rp = b.kron.cols();
  const int d = b.d;
  if (sys.kappas.rows() != m || sys.kappas.cols() != d)
    throw DimensionMismatchError("curvature system does not match B");
  if (log_coeffs.rows() != m || log_coeffs.cols() != d)
    throw DimensionMismatchError("log coefficients do not match B");
  if (sys.kappa_max() >= kKappaLimit)
    throw CurvatureTooLargeError(
        "curvature eigenvalue at or above pi^2: the correction weight "
        "degenerates; choose a base point closer to the data");

  NormalSystem ns;
  ns.b = b;
  ns.beta_sq.resize(m, d);
  for (std::int64_t e = 0; e < m; ++e)
    for (int j = 0; j < d; ++j) {
      double w = beta(sys.kappas(e, j));
      ns.beta_sq(e, j) = w * w;
    }

  // rhs(c, i) = sum_e kron(e, c) sum_j beta^2(e, j) logc(e, j) pt_e(j, i)
  MatrixXd t(m, d);
  for (std::int64_t e = 0; e < m; ++e)
    t.row(e) = ((ns.beta_sq.row(e).array() * log_coeffs.row(e).array())
                    .matrix() *
                b.phi_theta[e]);
  MatrixXd rhs_mat = b.kron.transpose() * t;  // rp x d
  ns.rhs.resize(rp * d);
  for (std::int64_t c = 0; c < rp; ++c)
    ns.rhs.segment(c * d, d) = rhs_mat.row(c).transpose();

  if (rp * d <= kDenseSystemLimit) {
    // Per-entry frame contraction Q_e = PT^T diag(beta^2) PT, then one
    // weighted Gram of the Kronecker rows per (i', i) pair.
    MatrixXd q(m, d * d);
    parallel_for(m, [&](std::int64_t e) {
      MatrixXd qe = b.phi_theta[e].transpose() *
                    ns.beta_sq.row(e).transpose().asDiagonal() *
                    b.phi_theta[e];
      q.row(e) = Eigen::Map<const VectorXd>(qe.data(), d * d).transpose();
    });
    ns.a = MatrixXd::Zero(rp * d, rp * d);
    for (int i1 = 0; i1 < d; ++i1)
      for (int i2 = i1; i2 < d; ++i2) {
        VectorXd qv = q.col(i2 * d + i1);  // column-major within q rows
        MatrixXd block = b.kron.transpose() * qv.asDiagonal() * b.kron;
        for (std::int64_t c1 = 0; c1 < rp; ++c1)
          for (std::int64_t c2 = 0; c2 < rp; ++c2) {
            ns.a(c1 * d + i1, c2 * d + i2) = block(c1, c2);
            ns.a(c2 * d + i2, c1 * d + i1) = block(c1, c2);
          }
      }
    ns.a = 0.5 * (ns.a + ns.a.transpose()).eval();
  } else if (m * d * rp * d <= kBMatrixElementLimit) {
    ns.b_dense.resize(m * d, rp * d);
    parallel_for(m, [&](std::int64_t e) {
      for (int j = 0; j < d; ++j) {
        double w = std::sqrt(ns.beta_sq(e, j));
        for (std::int64_t c = 0; c < rp; ++c)
          ns.b_dense.row(e * d + j).segment(c * d, d) =
              w * b.kron(e, c) * b.phi_theta[e].row(j);
      }
    });
  }
  return ns;
}

Eigen::VectorXd solve_normal_system(const NormalSystem& ns, long* iterations) {
  if (iterations) *iterations = -1;
  const double rhs_norm = ns.rhs.norm();
  const double tol = 1e-8 * rhs_norm;
  VectorXd v;
  if (ns.is_dense()) {
    Eigen::LLT<MatrixXd> llt(ns.a);
    if (llt.info() == Eigen::Success) {
      v = llt.solve(ns.rhs);
    } else {
      Eigen::LDLT<MatrixXd> ldlt(ns.a);
      if (ldlt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("normal matrix factorization failed");
      v = ldlt.solve(ns.rhs);
    }
    if (!v.allFinite() || (ns.a * v - ns.rhs).norm() > tol)
      throw NotPositiveDefiniteError(
          "normal system residual exceeds tolerance");
    return v;
  }
  // Conjugate gradients on the factored operator.
  const std::int64_t side = ns.side();
  v = VectorXd::Zero(side);
  VectorXd r = ns.rhs;
  VectorXd p = r;
  double rs = r.squaredNorm();
  const double target = 1e-10 * rhs_norm;
  const std::int64_t max_iter = 10 * side + 100;
  std::int64_t it = 0;
  for (; it < max_iter && std::sqrt(rs) > target; ++it) {
    VectorXd ap = ns.apply(p);
    double denom = p.dot(ap);
    if (!(denom > 0.0))
      throw NotPositiveDefiniteError("conjugate gradients met a "
                                     "non-positive direction");
    double alpha = rs / denom;
    v += alpha * p;
    r -= alpha * ap;
    double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  if (iterations) *iterations = it;
  if (!v.allFinite() || (ns.apply(v) - ns.rhs).norm() > tol)
    throw NotPositiveDefiniteError("normal system residual exceeds tolerance");
  return v;
}

TuckerFactors cc_correct_core(const BaseContext& base,
                              const TuckerFactors& truncated,
                              const TangentTensor& logs,
                              const CurvatureSystem& sys, long* iterations) {
  const MatrixXd& phi = base.basis();
  BFactors b = build_B(base, truncated.factors, phi, sys);
  MatrixXd logc = frame_coefficients(base, logs, sys);
  NormalSystem ns = build_normal_system(b, sys, logc);
  VectorXd v = solve_normal_system(ns, iterations);
  const std::int64_t rp = b.kron.cols();
  const int d = b.d;
  MatrixXd vm(rp, d);
  for (std::int64_t c = 0; c < rp; ++c)
    vm.row(c) = v.segment(c * d, d).transpose();
  TuckerFactors out = truncated;
  out.core.coords = vm * phi;
  return out;
}

TuckerFactors cc_thosvd(const ManifoldPoint& p, const MvTensor& t,
                        const std::vector<int>& ranks) {
  BaseContext base(p);
  TangentTensor logs = log_tensor(base, t);
  TuckerFactors full = thosvd(base, logs);
  TuckerFactors trunc = truncate(full, ranks);
  CurvatureSystem sys = build_curvature_system(base, logs);
  return cc_correct_core(base, trunc, logs, sys);
}

double zero_delta_lower_bound(double kappa_max, double naive_err) {
  if (naive_err < 0.0)
    throw InvalidArgumentError("naive error must be >= 0");
  double b = beta(kappa_max);
  return b * b * naive_err;
}

SandwichReport sandwich_bounds_check(const BaseContext& base,
                                     const TangentTensor& xi,
                                     const TangentTensor& logs,
                                     const CurvatureSystem& sys) {
  SandwichReport rep;
  rep.f_kappa = cc_loss(base, xi, logs, sys);
  TangentTensor diff = xi;
  diff.coords -= logs.coords;
  double nz = tangent_norm(base, diff);
  rep.f_zero = nz * nz;
  double bmax = beta(sys.kappa_max());
  double bmin = beta(sys.kappa_min());
  rep.lower_bound = bmax * bmax * rep.f_zero;
  double xn = tangent_norm(base, xi);
  rep.upper_margin = std::max(bmin * bmin - 1.0, 1.0 - bmax * bmax) * xn * xn;
  const double slack = 1e-9 * std::max(1.0, std::max(rep.f_zero, xn * xn));
  rep.lower_ok = rep.f_kappa >= rep.lower_bound - slack;
  rep.upper_ok = std::abs(rep.f_kappa - rep.f_zero) <= rep.upper_margin + slack;
  return rep;
}

DiscrepancyReport discrepancy(const MvTensor& t, const ManifoldPoint& p,
                              const TangentTensor& xi,
                              const CurvatureSystem& sys) {
  BaseContext base(p);
  TangentTensor logs = log_tensor(base, t);
  DiscrepancyReport rep;
  double f = cc_loss(base, xi, logs, sys);
  double dist = tensor_distance(t, exp_tensor(base, xi));
  rep.abs = f - dist * dist;
  TangentTensor diff = xi;
  diff.coords -= logs.coords;
  double nz = tangent_norm(base, diff);
  double denom = nz * nz * nz;
  rep.rel = denom > 0.0 ? rep.abs / denom : 0.0;
  return rep;
}

}  // namespace mantensor
