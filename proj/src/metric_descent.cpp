#include "mantensor/metric_descent.hpp"

#include <cmath>

#include "mantensor/parallel.hpp"

namespace mantensor {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_inputs(const BaseContext& base, const MvTensor& t,
                  const std::vector<MatrixXd>& factors, const MatrixXd& phi,
                  const CoefficientTensor& v) {
  if (!(t.manifold == base.manifold()))
    throw DimensionMismatchError("tensor manifold does not match base point");
  if (phi.rows() != base.dim() || phi.cols() != base.embedding_dim())
    throw DimensionMismatchError("phi must be a full tangent basis");
  if (static_cast<int>(factors.size()) != t.order())
    throw DimensionMismatchError("need one factor per mode");
  std::int64_t rp = 1;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k].rows() != t.shape[k])
      throw DimensionMismatchError("factor rows do not match tensor shape");
    rp *= factors[k].cols();
  }
  if (v.d != base.dim() || v.values.rows() != rp || v.values.cols() != v.d)
    throw DimensionMismatchError("coefficients do not match factors");
}

// Entry tangent coordinates of the reconstruction v x U x phi.
MatrixXd reconstruction_rows(const MatrixXd& kron, const MatrixXd& phi,
                             const CoefficientTensor& v) {
  return kron * (v.values * phi);
}

}  // namespace

double mc_loss(const BaseContext& base, const MvTensor& t,
               const std::vector<Eigen::MatrixXd>& factors,
               const Eigen::MatrixXd& phi, const CoefficientTensor& v) {
  check_inputs(base, t, factors, phi, v);
  MatrixXd z = reconstruction_rows(kronecker_product(factors), phi, v);
  const std::int64_t m = t.num_entries();
  VectorXd sq(m);
  parallel_for(m, [&](std::int64_t e) {
    VectorXd y = base.exp(z.row(e).transpose());
    BaseContext at_y({t.manifold, y});
    double dist = at_y.distance(t.coords.row(e).transpose());
    sq[e] = dist * dist;
  });
  double total = 0.0;
  for (std::int64_t e = 0; e < m; ++e) total += sq[e];
  return total;
}

Eigen::MatrixXd mc_gradient(const BaseContext& base, const MvTensor& t,
                            const std::vector<Eigen::MatrixXd>& factors,
                            const Eigen::MatrixXd& phi,
                            const CoefficientTensor& v) {
  check_inputs(base, t, factors, phi, v);
  MatrixXd kron = kronecker_product(factors);
  MatrixXd z = reconstruction_rows(kron, phi, v);
  MatrixXd wphi = base.metric_rows(phi);
  const std::int64_t m = t.num_entries();
  const int d = base.dim();
  MatrixXd g(m, d);
  parallel_for(m, [&](std::int64_t e) {
    VectorXd ze = z.row(e).transpose();
    VectorXd y = base.exp(ze);
    BaseContext at_y({t.manifold, y});
    VectorXd back = at_y.log(t.coords.row(e).transpose());
    CurvatureEigenbasis eb = base.curvature_eigenbasis(ze);
    MatrixXd psi_y = base.transport_rows_to(y, eb.thetas);
    MatrixXd wpsi_y = at_y.metric_rows(psi_y);
    VectorXd wback = at_y.metric_coords(back);
    // a_j = beta(lambda_j) <log_y t_e, Psi_y_j>
    VectorXd a = wpsi_y * wback;
    for (int j = 0; j < d; ++j) a[j] *= beta(eb.kappas[j]);
    // <phi_i, Psi_p_j> contracted against a
    MatrixXd pt = base.metric_rows(eb.thetas) * wphi.transpose();
    g.row(e) = (pt.transpose() * a).transpose();
  });
  return -2.0 * (kron.transpose() * g);
}

McResult mc_thosvd(const ManifoldPoint& p, const MvTensor& t,
                   const std::vector<int>& ranks, const McOptions& opts) {
  if (!(opts.step > 0.0)) throw InvalidArgumentError("step must be > 0");
  if (opts.max_iter < 0) throw InvalidArgumentError("max_iter must be >= 0");
  BaseContext base(p);
  TangentTensor logs = log_tensor(base, t);
  TuckerFactors trunc = truncate(thosvd(base, logs), ranks);
  const MatrixXd& phi = base.basis();
  MatrixXd wphi = base.metric_rows(phi);

  CoefficientTensor v;
  v.ranks = trunc.core.shape;
  v.d = base.dim();
  v.values = base.metric_rows(trunc.core.coords) * wphi.transpose();

  McResult res;
  res.initial_loss = mc_loss(base, t, trunc.factors, phi, v);
  double best_loss = res.initial_loss;
  CoefficientTensor best = v;
  MatrixXd grad = mc_gradient(base, t, trunc.factors, phi, v);
  double g0 = grad.norm();
  res.trace.push_back({0, res.initial_loss, g0, opts.step});

  const double diverged_at = 10.0 * res.initial_loss;
  if (g0 < 1e-30) {
    res.converged = true;
  } else {
    for (int it = 1; it <= opts.max_iter; ++it) {
      v.values -= opts.step * grad;
      double loss = mc_loss(base, t, trunc.factors, phi, v);
      if (!std::isfinite(loss) || loss > diverged_at)
        throw DivergedError("descent loss exceeded 10x the initial value");
      grad = mc_gradient(base, t, trunc.factors, phi, v);
      double gn = grad.norm();
      res.trace.push_back({it, loss, gn, opts.step});
      res.iterations = it;
      if (loss < best_loss) {
        best_loss = loss;
        best = v;
      }
      if (gn < opts.grad_tol_rel * g0) {
        res.converged = true;
        break;
      }
    }
  }
  res.final_loss = best_loss;
  res.factors = trunc;
  res.factors.core.coords = best.values * phi;
  return res;
}

double autotune_step(const ManifoldPoint& p, const MvTensor& t,
                     const std::vector<int>& ranks, int probe_iters) {
  if (probe_iters < 1) throw InvalidArgumentError("probe_iters must be >= 1");
  for (int k = 0; k <= 20; ++k) {
    McOptions opts;
    opts.step = std::ldexp(1.0, -k);
    opts.max_iter = probe_iters;
    opts.grad_tol_rel = 0.0;  // probe runs the full window unless stationary
    try {
      mc_thosvd(p, t, ranks, opts);
      return opts.step;
    } catch (const DivergedError&) {
    } catch (const NumericError&) {
    } catch (const CutLocusError&) {
    }
  }
  throw NoStableStepError(
      "no step in {2^0..2^-20} kept the first descent iterations stable");
}

}  // namespace mantensor
