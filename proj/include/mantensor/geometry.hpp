#pragma once

#include <Eigen/Dense>

#include "mantensor/errors.hpp"
#include "mantensor/rng.hpp"

namespace mantensor {

enum class ManifoldKind { Euclidean, Sphere, Spd };

// Descriptor of a symmetric manifold with closed-form kernels.
//   Euclidean(d): embedding dimension d.
//   Sphere(d):    unit sphere in R^{d+1}.
//   Spd(n):       n x n symmetric positive definite matrices, bi-invariant
//                 metric, intrinsic dimension n(n+1)/2, embedded as n^2 coords.
struct ManifoldDescriptor {
  ManifoldKind kind = ManifoldKind::Euclidean;
  int dim = 0;            // intrinsic dimension d
  int embedding_dim = 0;  // length of coordinate vectors

  static ManifoldDescriptor euclidean(int d);
  static ManifoldDescriptor sphere(int d);
  static ManifoldDescriptor spd(int n);

  // matrix size n for Spd
  int spd_size() const;

  bool operator==(const ManifoldDescriptor&) const = default;
};

struct ManifoldPoint {
  ManifoldDescriptor manifold;
  Eigen::VectorXd coords;
};

struct TangentVector {
  ManifoldPoint base;
  Eigen::VectorXd coords;
};

struct CurvatureEigenbasis {
  Eigen::VectorXd kappas;  // d eigenvalues of w -> R(w, v)v
  Eigen::MatrixXd thetas;  // d x embedding_dim, rows orthonormal at base
};

// Throws InvariantViolationError when coords are off-manifold
// (sphere: |norm - 1| > tol; spd: asymmetry > tol or non-positive spectrum).
void validate_point(const ManifoldPoint& p, double tol = 1e-10);

// Symmetric eigendecomposition with eigenvalues sorted descending and a
// deterministic sign fix: the largest-magnitude component of each
// eigenvector (first on ties) is made positive.
void eigh_descending(const Eigen::MatrixXd& s, Eigen::VectorXd& evals,
                     Eigen::MatrixXd& evecs);

// Precomputed base-point factorization. All tensor-level kernels route
// through one of these so the SPD square roots are formed once per base.
class BaseContext {
 public:
  explicit BaseContext(ManifoldPoint p);

  const ManifoldPoint& point() const { return p_; }
  const ManifoldDescriptor& manifold() const { return p_.manifold; }
  ManifoldKind kind() const { return p_.manifold.kind; }
  int dim() const { return p_.manifold.dim; }
  int embedding_dim() const { return p_.manifold.embedding_dim; }

  Eigen::VectorXd exp(const Eigen::VectorXd& v) const;
  Eigen::VectorXd log(const Eigen::VectorXd& x) const;
  double distance(const Eigen::VectorXd& x) const;
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double norm(const Eigen::VectorXd& v) const;

  // Transports tangent v at the base to the point with coords q.
  Eigen::VectorXd transport_to(const Eigen::VectorXd& q,
                               const Eigen::VectorXd& v) const;
  // Transports every row at once, forming the transporter a single time.
  Eigen::MatrixXd transport_rows_to(const Eigen::VectorXd& q,
                                    const Eigen::MatrixXd& rows) const;

  // d x embedding_dim, rows orthonormal in the base metric. Deterministic.
  const Eigen::MatrixXd& basis() const;

  Eigen::VectorXd curvature_op(const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v,
                               const Eigen::VectorXd& w) const;

  // Orthonormal eigenframe of w -> R(w, v)v. First frame member is v/|v|
  // (kappa 0); for zero v falls back to basis() with all-zero kappas.
  CurvatureEigenbasis curvature_eigenbasis(const Eigen::VectorXd& v) const;

  // Isotropic Gaussian in basis() coordinates, N(0, variance) per coordinate.
  Eigen::VectorXd random_tangent(double variance, CounterRng& rng) const;

  // Isometric coordinates: w = metric_coords(v) satisfies
  // dot(metric_coords(u), metric_coords(v)) == inner(u, v).
  Eigen::VectorXd metric_coords(const Eigen::VectorXd& v) const;
  Eigen::VectorXd embed_coords(const Eigen::VectorXd& w) const;
  // metric_coords applied to every row
  Eigen::MatrixXd metric_rows(const Eigen::MatrixXd& rows) const;

 private:
  void check_tangent_size(const Eigen::VectorXd& v) const;

  ManifoldPoint p_;
  Eigen::MatrixXd phalf_;     // Spd only
  Eigen::MatrixXd pinvhalf_;  // Spd only
  // vec(p^{±1/2} M p^{±1/2}) as a single matrix-vector product; built in the
  // constructor for small sizes so the hot per-entry paths stay GEMM-shaped.
  Eigen::MatrixXd kron_phalf_;
  Eigen::MatrixXd kron_pinvhalf_;
  mutable Eigen::MatrixXd basis_;
};

// Convenience wrappers building a fresh BaseContext per call.
ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v);
TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& x);
double distance(const ManifoldPoint& p, const ManifoldPoint& x);
double inner(const ManifoldPoint& p, const TangentVector& u,
             const TangentVector& v);
TangentVector parallel_transport(const ManifoldPoint& p,
                                 const ManifoldPoint& q,
                                 const TangentVector& v);
Eigen::MatrixXd orthonormal_basis(const ManifoldPoint& p);
TangentVector curvature_operator(const ManifoldPoint& p,
                                 const TangentVector& u,
                                 const TangentVector& v,
                                 const TangentVector& w);
CurvatureEigenbasis curvature_eigenbasis(const ManifoldPoint& p,
                                         const TangentVector& v);
TangentVector random_tangent(const ManifoldPoint& p, double variance,
                             CounterRng& rng);

}  // namespace mantensor
