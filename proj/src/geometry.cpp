#include "mantensor/geometry.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace mantensor {

namespace {

constexpr double kCutLocusTol = 1e-6;
constexpr double kGramSchmidtTol = 1e-8;
constexpr double kZeroTangentTol = 1e-14;

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd as_matrix(const VectorXd& v, int n) {
  return Eigen::Map<const MatrixXd>(v.data(), n, n);
}

VectorXd as_vector(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// K with K * vec(X) == vec(A X A); vec is column-major as in as_vector.
MatrixXd sandwich_operator(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  MatrixXd k(n * n, n * n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      for (int t = 0; t < n; ++t)
        for (int s = 0; s < n; ++s)
          k(c * n + r, t * n + s) = a(c, t) * a(r, s);
  return k;
}

// Above this size the cached sandwich operators stop paying for themselves.
constexpr int kSandwichCacheLimit = 8;

// Ascending eigenpairs. The 2x2/3x3 cases run on fixed-size types: same
// iterative algorithm, but no heap traffic, which matters on per-entry paths.
void eigh_ascending(const MatrixXd& s, VectorXd& evals, MatrixXd& evecs) {
  const int n = static_cast<int>(s.rows());
  if (n == 3) {
    Eigen::Matrix3d m = s;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    if (es.info() != Eigen::Success)
      throw NumericError("symmetric eigendecomposition failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
    return;
  }
  if (n == 2) {
    Eigen::Matrix2d m = s;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    if (es.info() != Eigen::Success)
      throw NumericError("symmetric eigendecomposition failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
    return;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  if (es.info() != Eigen::Success)
    throw NumericError("symmetric eigendecomposition failed");
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
}

}  // namespace

void eigh_descending(const MatrixXd& s, VectorXd& evals, MatrixXd& evecs) {
  VectorXd asc;
  MatrixXd vecs;
  eigh_ascending(s, asc, vecs);
  const int n = static_cast<int>(s.rows());
  evals.resize(n);
  evecs.resize(n, n);
  for (int k = 0; k < n; ++k) {
    evals[k] = asc[n - 1 - k];
    VectorXd v = vecs.col(n - 1 - k);
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (v[imax] < 0.0) v = -v;
    evecs.col(k) = v;
  }
}

namespace {

MatrixXd spd_function(const MatrixXd& s, double (*f)(double)) {
  VectorXd d;
  MatrixXd u;
  eigh_ascending(symmetrized(s), d, u);
  for (int i = 0; i < d.size(); ++i) d[i] = f(d[i]);
  return u * d.asDiagonal() * u.transpose();
}

MatrixXd spd_log(const MatrixXd& s, const char* who) {
  VectorXd d;
  MatrixXd u;
  eigh_ascending(symmetrized(s), d, u);
  if (d.minCoeff() <= 0.0)
    throw InvariantViolationError(std::string(who) +
                                  ": matrix is not positive definite");
  for (int i = 0; i < d.size(); ++i) d[i] = std::log(d[i]);
  return u * d.asDiagonal() * u.transpose();
}

double sinc(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

}  // namespace

ManifoldDescriptor ManifoldDescriptor::euclidean(int d) {
  if (d < 1) throw InvalidArgumentError("euclidean dimension must be >= 1");
  return {ManifoldKind::Euclidean, d, d};
}

ManifoldDescriptor ManifoldDescriptor::sphere(int d) {
  if (d < 1) throw InvalidArgumentError("sphere dimension must be >= 1");
  return {ManifoldKind::Sphere, d, d + 1};
}

ManifoldDescriptor ManifoldDescriptor::spd(int n) {
  if (n < 1) throw InvalidArgumentError("spd size must be >= 1");
  return {ManifoldKind::Spd, n * (n + 1) / 2, n * n};
}

int ManifoldDescriptor::spd_size() const {
  if (kind != ManifoldKind::Spd)
    throw InvalidArgumentError("spd_size on non-spd manifold");
  int n = static_cast<int>(std::lround(std::sqrt(double(embedding_dim))));
  return n;
}

void validate_point(const ManifoldPoint& p, double tol) {
  if (p.coords.size() != p.manifold.embedding_dim)
    throw DimensionMismatchError("point coords length does not match manifold");
  if (!p.coords.allFinite())
    throw InvariantViolationError("point has non-finite coordinates");
  switch (p.manifold.kind) {
    case ManifoldKind::Euclidean:
      return;
    case ManifoldKind::Sphere: {
      double n = p.coords.norm();
      if (std::abs(n - 1.0) > tol)
        throw InvariantViolationError("sphere point is not unit norm");
      return;
    }
    case ManifoldKind::Spd: {
      int n = p.manifold.spd_size();
      MatrixXd m = as_matrix(p.coords, n);
      double scale = std::max(1.0, m.norm());
      if ((m - m.transpose()).norm() > tol * scale)
        throw InvariantViolationError("spd point is not symmetric");
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m));
      if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw InvariantViolationError("spd point is not positive definite");
      return;
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

BaseContext::BaseContext(ManifoldPoint p) : p_(std::move(p)) {
  if (p_.coords.size() != p_.manifold.embedding_dim)
    throw DimensionMismatchError("base coords length does not match manifold");
  if (kind() == ManifoldKind::Spd) {
    int n = p_.manifold.spd_size();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        symmetrized(as_matrix(p_.coords, n)));
    if (es.info() != Eigen::Success)
      throw NumericError("base point eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw InvariantViolationError("spd base point is not positive definite");
    VectorXd sq = es.eigenvalues().cwiseSqrt();
    phalf_ = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
    pinvhalf_ = es.eigenvectors() * sq.cwiseInverse().asDiagonal() *
                es.eigenvectors().transpose();
    if (n <= kSandwichCacheLimit) {
      kron_phalf_ = sandwich_operator(phalf_);
      kron_pinvhalf_ = sandwich_operator(pinvhalf_);
    }
  }
}

void BaseContext::check_tangent_size(const VectorXd& v) const {
  if (v.size() != embedding_dim())
    throw DimensionMismatchError("tangent coords length does not match manifold");
}

VectorXd BaseContext::exp(const VectorXd& v) const {
  check_tangent_size(v);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return p_.coords + v;
    case ManifoldKind::Sphere: {
      double t = v.norm();
      VectorXd x = std::cos(t) * p_.coords + sinc(t) * v;
      double n = x.norm();
      if (!(n > 0.0) || !x.allFinite())
        throw NumericError("sphere exp produced a non-finite point");
      return x / n;
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd s = pinvhalf_ * as_matrix(v, n) * pinvhalf_;
      MatrixXd e = spd_function(s, [](double t) { return std::exp(t); });
      MatrixXd x = symmetrized(phalf_ * e * phalf_);
      if (!x.allFinite())
        throw NumericError("spd exp produced a non-finite point");
      return as_vector(x);
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

VectorXd BaseContext::log(const VectorXd& x) const {
  check_tangent_size(x);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return x - p_.coords;
    case ManifoldKind::Sphere: {
      double c = p_.coords.dot(x);
      VectorXd u = x - c * p_.coords;
      double un = u.norm();
      double theta = std::atan2(un, c);
      if (theta >= M_PI - kCutLocusTol)
        throw CutLocusError("log map near the sphere cut locus");
      if (un < 1e-15) return VectorXd::Zero(x.size());
      return (theta / un) * u;
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd s = pinvhalf_ * as_matrix(x, n) * pinvhalf_;
      MatrixXd l = spd_log(s, "log_map");
      return as_vector(symmetrized(phalf_ * l * phalf_));
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

double BaseContext::distance(const VectorXd& x) const {
  check_tangent_size(x);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return (x - p_.coords).norm();
    case ManifoldKind::Sphere: {
      double c = p_.coords.dot(x);
      double un = (x - c * p_.coords).norm();
      return std::atan2(un, c);
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd s = pinvhalf_ * as_matrix(x, n) * pinvhalf_;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(s));
      if (es.info() != Eigen::Success)
        throw NumericError("symmetric eigendecomposition failed");
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw InvariantViolationError("distance: matrix is not positive definite");
      return es.eigenvalues().array().log().matrix().norm();
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

double BaseContext::inner(const VectorXd& u, const VectorXd& v) const {
  check_tangent_size(u);
  check_tangent_size(v);
  if (kind() == ManifoldKind::Spd) {
    int n = p_.manifold.spd_size();
    MatrixXd wu = pinvhalf_ * as_matrix(u, n) * pinvhalf_;
    MatrixXd wv = pinvhalf_ * as_matrix(v, n) * pinvhalf_;
    return (wu.array() * wv.array()).sum();
  }
  return u.dot(v);
}

double BaseContext::norm(const VectorXd& v) const {
  return std::sqrt(std::max(0.0, inner(v, v)));
}

VectorXd BaseContext::transport_to(const VectorXd& q, const VectorXd& v) const {
  check_tangent_size(q);
  check_tangent_size(v);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return v;
    case ManifoldKind::Sphere: {
      VectorXd u = log(q);
      double theta = u.norm();
      if (theta < 1e-15) return v;
      VectorXd e = u / theta;
      double ve = v.dot(e);
      VectorXd out = v - ve * e +
                     ve * (std::cos(theta) * e - std::sin(theta) * p_.coords);
      out -= out.dot(q) * q;  // strip fp drift off the new tangent space
      return out;
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd a = spd_log(pinvhalf_ * as_matrix(q, n) * pinvhalf_,
                           "parallel_transport");
      MatrixXd eh = spd_function(0.5 * a, [](double t) { return std::exp(t); });
      MatrixXd e = phalf_ * eh * pinvhalf_;
      return as_vector(symmetrized(e * as_matrix(v, n) * e.transpose()));
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

MatrixXd BaseContext::transport_rows_to(const VectorXd& q,
                                        const MatrixXd& rows) const {
  check_tangent_size(q);
  if (rows.cols() != embedding_dim())
    throw DimensionMismatchError("tangent coords length does not match manifold");
  MatrixXd out(rows.rows(), rows.cols());
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return rows;
    case ManifoldKind::Sphere: {
      VectorXd u = log(q);
      double theta = u.norm();
      if (theta < 1e-15) return rows;
      VectorXd e = u / theta;
      VectorXd shifted = std::cos(theta) * e - std::sin(theta) * p_.coords;
      for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        VectorXd v = rows.row(r).transpose();
        double ve = v.dot(e);
        VectorXd w = v - ve * e + ve * shifted;
        w -= w.dot(q) * q;
        out.row(r) = w.transpose();
      }
      return out;
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd a = spd_log(pinvhalf_ * as_matrix(q, n) * pinvhalf_,
                           "parallel_transport");
      MatrixXd eh = spd_function(0.5 * a, [](double t) { return std::exp(t); });
      MatrixXd e = phalf_ * eh * pinvhalf_;
      for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        VectorXd v = rows.row(r).transpose();
        out.row(r) =
            as_vector(symmetrized(e * as_matrix(v, n) * e.transpose()))
                .transpose();
      }
      return out;
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

const MatrixXd& BaseContext::basis() const {
  if (basis_.size() > 0) return basis_;
  const int d = dim();
  const int m = embedding_dim();
  MatrixXd b(d, m);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      b = MatrixXd::Identity(d, m);
      break;
    case ManifoldKind::Sphere: {
      // Gram-Schmidt of the coordinate frame against the base point.
      int row = 0;
      for (int i = 0; i < m && row < d; ++i) {
        VectorXd c = VectorXd::Zero(m);
        c[i] = 1.0;
        c -= c.dot(p_.coords) * p_.coords;
        for (int r = 0; r < row; ++r) c -= c.dot(b.row(r)) * b.row(r).transpose();
        double n = c.norm();
        if (n < kGramSchmidtTol) continue;
        b.row(row++) = c.transpose() / n;
      }
      if (row != d) throw NumericError("sphere basis construction failed");
      break;
    }
    case ManifoldKind::Spd: {
      // Congruence image of the canonical symmetric-matrix frame: diagonal
      // directions first, then scaled off-diagonal pairs in row-major order.
      int n = p_.manifold.spd_size();
      int row = 0;
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      for (int i = 0; i < n; ++i) {
        MatrixXd e = MatrixXd::Zero(n, n);
        e(i, i) = 1.0;
        b.row(row++) = as_vector(phalf_ * e * phalf_).transpose();
      }
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          MatrixXd e = MatrixXd::Zero(n, n);
          e(i, j) = e(j, i) = inv_sqrt2;
          b.row(row++) = as_vector(phalf_ * e * phalf_).transpose();
        }
      break;
    }
  }
  basis_ = std::move(b);
  return basis_;
}

VectorXd BaseContext::curvature_op(const VectorXd& u, const VectorXd& v,
                                   const VectorXd& w) const {
  check_tangent_size(u);
  check_tangent_size(v);
  check_tangent_size(w);
  switch (kind()) {
    case ManifoldKind::Euclidean:
      return VectorXd::Zero(u.size());
    case ManifoldKind::Sphere:
      // constant sectional curvature one
      return v.dot(w) * u - u.dot(w) * v;
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd wu = pinvhalf_ * as_matrix(u, n) * pinvhalf_;
      MatrixXd wv = pinvhalf_ * as_matrix(v, n) * pinvhalf_;
      MatrixXd ww = pinvhalf_ * as_matrix(w, n) * pinvhalf_;
      MatrixXd c = wu * wv - wv * wu;
      MatrixXd r = -0.25 * (c * ww - ww * c);
      return as_vector(symmetrized(phalf_ * r * phalf_));
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

CurvatureEigenbasis BaseContext::curvature_eigenbasis(const VectorXd& v) const {
  check_tangent_size(v);
  const int d = dim();
  const int m = embedding_dim();
  CurvatureEigenbasis out;
  double vn = norm(v);
  if (vn < kZeroTangentTol) {
    out.thetas = basis();
    out.kappas = VectorXd::Zero(d);
    return out;
  }
  out.kappas.resize(d);
  out.thetas.resize(d, m);
  switch (kind()) {
    case ManifoldKind::Euclidean:
    case ManifoldKind::Sphere: {
      VectorXd vhat = v / vn;
      out.thetas.row(0) = vhat.transpose();
      out.kappas[0] = 0.0;
      double kappa = kind() == ManifoldKind::Sphere ? vn * vn : 0.0;
      int row = 1;
      for (int i = 0; i < m && row < d; ++i) {
        VectorXd c = VectorXd::Zero(m);
        c[i] = 1.0;
        if (kind() == ManifoldKind::Sphere) c -= c.dot(p_.coords) * p_.coords;
        c -= c.dot(vhat) * vhat;
        for (int r = 1; r < row; ++r)
          c -= c.dot(out.thetas.row(r)) * out.thetas.row(r).transpose();
        double n = c.norm();
        if (n < kGramSchmidtTol) continue;
        out.thetas.row(row) = c.transpose() / n;
        out.kappas[row] = kappa;
        ++row;
      }
      if (row != d) throw NumericError("curvature eigenbasis construction failed");
      return out;
    }
    case ManifoldKind::Spd: {
      int n = p_.manifold.spd_size();
      MatrixXd s = symmetrized(pinvhalf_ * as_matrix(v, n) * pinvhalf_) / vn;
      VectorXd lam;
      MatrixXd vecs;
      eigh_descending(s, lam, vecs);
      // Zero-curvature block: the normalized tangent itself, completed by
      // Gram-Schmidt over the diagonal directions of its eigenbasis.
      std::vector<MatrixXd> frame;
      frame.reserve(d);
      frame.push_back(s);
      for (int c = 0; c < n && static_cast<int>(frame.size()) < n; ++c) {
        MatrixXd cand = vecs.col(c) * vecs.col(c).transpose();
        for (const MatrixXd& f : frame)
          cand -= (cand.array() * f.array()).sum() * f;
        double fn = cand.norm();
        if (fn < kGramSchmidtTol) continue;
        frame.push_back(cand / fn);
      }
      if (static_cast<int>(frame.size()) != n)
        throw NumericError("curvature eigenbasis construction failed");
      int row = 0;
      for (; row < n; ++row) out.kappas[row] = 0.0;
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      for (int c = 0; c < n; ++c)
        for (int e = c + 1; e < n; ++e) {
          frame.push_back(inv_sqrt2 *
                          (vecs.col(c) * vecs.col(e).transpose() +
                           vecs.col(e) * vecs.col(c).transpose()));
          double gap = lam[c] - lam[e];
          out.kappas[row++] = -0.25 * gap * gap * vn * vn;
        }
      if (kron_phalf_.size() > 0) {
        MatrixXd stacked(d, m);
        for (int k = 0; k < d; ++k)
          stacked.row(k) = Eigen::Map<const VectorXd>(frame[k].data(), m);
        out.thetas = stacked * kron_phalf_;
      } else {
        for (int k = 0; k < d; ++k)
          out.thetas.row(k) =
              as_vector(symmetrized(phalf_ * frame[k] * phalf_)).transpose();
      }
      return out;
    }
  }
  throw InvalidArgumentError("unknown manifold kind");
}

VectorXd BaseContext::random_tangent(double variance, CounterRng& rng) const {
  if (variance < 0.0) throw InvalidArgumentError("variance must be >= 0");
  const MatrixXd& b = basis();
  double sd = std::sqrt(variance);
  VectorXd v = VectorXd::Zero(embedding_dim());
  for (int i = 0; i < dim(); ++i)
    v += (sd * rng.next_normal()) * b.row(i).transpose();
  return v;
}

VectorXd BaseContext::metric_coords(const VectorXd& v) const {
  check_tangent_size(v);
  if (kind() != ManifoldKind::Spd) return v;
  if (kron_pinvhalf_.size() > 0) return kron_pinvhalf_ * v;
  int n = p_.manifold.spd_size();
  return as_vector(pinvhalf_ * as_matrix(v, n) * pinvhalf_);
}

VectorXd BaseContext::embed_coords(const VectorXd& w) const {
  check_tangent_size(w);
  if (kind() != ManifoldKind::Spd) return w;
  if (kron_phalf_.size() > 0) return kron_phalf_ * w;
  int n = p_.manifold.spd_size();
  return as_vector(phalf_ * as_matrix(w, n) * phalf_);
}

MatrixXd BaseContext::metric_rows(const MatrixXd& rows) const {
  if (kind() != ManifoldKind::Spd) return rows;
  // the sandwich operator is symmetric, so acting on rows needs no transpose
  if (kron_pinvhalf_.size() > 0) return rows * kron_pinvhalf_;
  MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index e = 0; e < rows.rows(); ++e)
    out.row(e) = metric_coords(rows.row(e).transpose()).transpose();
  return out;
}

namespace {
void check_same_manifold(const ManifoldPoint& p, const ManifoldPoint& q) {
  if (!(p.manifold == q.manifold))
    throw DimensionMismatchError("points live on different manifolds");
}
void check_base(const ManifoldPoint& p, const TangentVector& v) {
  check_same_manifold(p, v.base);
  if (!(v.base.coords.array() == p.coords.array()).all())
    throw InvalidArgumentError("tangent vector is based at a different point");
}
}  // namespace

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v) {
  check_base(p, v);
  return {p.manifold, BaseContext(p).exp(v.coords)};
}

TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& x) {
  check_same_manifold(p, x);
  return {p, BaseContext(p).log(x.coords)};
}

double distance(const ManifoldPoint& p, const ManifoldPoint& x) {
  check_same_manifold(p, x);
  return BaseContext(p).distance(x.coords);
}

double inner(const ManifoldPoint& p, const TangentVector& u,
             const TangentVector& v) {
  check_base(p, u);
  check_base(p, v);
  return BaseContext(p).inner(u.coords, v.coords);
}

TangentVector parallel_transport(const ManifoldPoint& p, const ManifoldPoint& q,
                                 const TangentVector& v) {
  check_base(p, v);
  check_same_manifold(p, q);
  return {q, BaseContext(p).transport_to(q.coords, v.coords)};
}

Eigen::MatrixXd orthonormal_basis(const ManifoldPoint& p) {
  return BaseContext(p).basis();
}

TangentVector curvature_operator(const ManifoldPoint& p, const TangentVector& u,
                                 const TangentVector& v,
                                 const TangentVector& w) {
  check_base(p, u);
  check_base(p, v);
  check_base(p, w);
  return {p, BaseContext(p).curvature_op(u.coords, v.coords, w.coords)};
}

CurvatureEigenbasis curvature_eigenbasis(const ManifoldPoint& p,
                                         const TangentVector& v) {
  check_base(p, v);
  return BaseContext(p).curvature_eigenbasis(v.coords);
}

TangentVector random_tangent(const ManifoldPoint& p, double variance,
                             CounterRng& rng) {
  return {p, BaseContext(p).random_tangent(variance, rng)};
}

}  // namespace mantensor
