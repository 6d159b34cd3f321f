#pragma once

#include <vector>

#include "mantensor/tucker.hpp"

namespace mantensor {

// Curvature weight: sin(sqrt(k))/sqrt(k) for k > 0, sinh(sqrt(-k))/sqrt(-k)
// for k < 0, 1 at 0. Decreasing, with beta(pi^2) = 0; near zero a 4-term
// series keeps the branches continuous.
double beta(double kappa);

// Side length up to which the normal matrix is materialised and factorised
// directly. Larger systems go through conjugate gradients whose iterate is
// two passes over B, so the per-iteration cost stays linear in the size of
// B (quadratic in rank) instead of quartic.
inline constexpr std::int64_t kDenseSystemLimit = 16;

// Element budget for keeping B as one dense matrix during the iterative
// solve. Systems above it fall back to the factored operator, which never
// materialises B.
inline constexpr std::int64_t kBMatrixElementLimit = std::int64_t(1) << 22;

// Eigenvalues above this raise CurvatureTooLarge (beta crosses zero at pi^2).
inline constexpr double kKappaLimit = 9.869604401089358 - 1e-9;  // pi^2 - 1e-9

// Per-entry curvature eigenframes along the entrywise logs.
struct CurvatureSystem {
  Eigen::MatrixXd kappas;               // entries x d
  std::vector<Eigen::MatrixXd> thetas;  // per entry: d x embedding_dim
  // thetas rows in metric coordinates; dot products realise the base metric
  std::vector<Eigen::MatrixXd> thetas_metric;

  double kappa_max() const;
  double kappa_min() const;
};

CurvatureSystem build_curvature_system(const BaseContext& base,
                                       const TangentTensor& logs);
CurvatureSystem build_curvature_system(const ManifoldPoint& p,
                                       const MvTensor& t);

// Coefficients of each tangent entry against its entry frame: (e, j) ->
// inner(x_e, theta_{e,j}).
Eigen::MatrixXd frame_coefficients(const BaseContext& base,
                                   const TangentTensor& x,
                                   const CurvatureSystem& sys);

// Curvature-corrected squared approximation error of the tangent
// configuration xi against the logs of t.
double cc_loss(const TangentTensor& xi, const MvTensor& t,
               const CurvatureSystem& sys);
double cc_loss(const BaseContext& base, const TangentTensor& xi,
               const TangentTensor& logs, const CurvatureSystem& sys);

// Coupling tensor between core coefficients and entry frames, kept in
// factored form: row (e, j) equals kron(e, :) tensor phi_theta[e](j, :).
struct BFactors {
  std::vector<int> data_shape;
  std::vector<int> ranks;
  int d = 0;                              // frame size per entry
  Eigen::MatrixXd kron;                   // entries x prod(ranks)
  std::vector<Eigen::MatrixXd> phi_theta; // per entry: d x d, (j, i)

  std::int64_t rows() const { return kron.rows() * d; }
  std::int64_t cols() const { return kron.cols() * d; }
  // Materialises the full matrix; intended for small systems and tests.
  Eigen::MatrixXd dense() const;
};

BFactors build_B(const BaseContext& base,
                 const std::vector<Eigen::MatrixXd>& factors,
                 const Eigen::MatrixXd& phi, const CurvatureSystem& sys);

// Normal equations A v = rhs with A = B^T diag(beta^2) B. A is materialised
// densely only up to kDenseSystemLimit unknowns; larger systems are solved
// iteratively, against a cached dense B when it fits the element budget and
// against the factored operator otherwise.
struct NormalSystem {
  BFactors b;
  Eigen::MatrixXd beta_sq;  // entries x d
  Eigen::VectorXd rhs;
  Eigen::MatrixXd a;        // dense matrix, empty above the size limit
  // rows of B pre-scaled by beta, empty above the element budget
  Eigen::MatrixXd b_dense;

  std::int64_t side() const { return b.cols(); }
  bool is_dense() const { return a.size() > 0; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
};

// log_coeffs = frame_coefficients(base, logs, sys).
NormalSystem build_normal_system(const BFactors& b, const CurvatureSystem& sys,
                                 const Eigen::MatrixXd& log_coeffs);

// Cholesky with a semidefinite fallback for dense systems, conjugate
// gradients for factored ones. Verifies the residual and throws
// NotPositiveDefinite when it exceeds 1e-8 * |rhs|. iterations, when given,
// receives the conjugate-gradient count (-1 for direct solves).
Eigen::VectorXd solve_normal_system(const NormalSystem& ns,
                                    long* iterations = nullptr);

// Replaces the core of truncated factors by the minimiser of the
// curvature-corrected loss over coefficient tensors with the same ranks.
TuckerFactors cc_correct_core(const BaseContext& base,
                              const TuckerFactors& truncated,
                              const TangentTensor& logs,
                              const CurvatureSystem& sys,
                              long* iterations = nullptr);

// Full pipeline: logs, thosvd, truncation to ranks (clamping like
// truncate), curvature system, normal equations.
TuckerFactors cc_thosvd(const ManifoldPoint& p, const MvTensor& t,
                        const std::vector<int>& ranks);

// beta(kappa_max)^2 * naive_err: curvature-blind error admitted as a lower
// bound for the corrected loss at the same ranks.
double zero_delta_lower_bound(double kappa_max, double naive_err);

struct SandwichReport {
  double f_kappa = 0.0;
  double f_zero = 0.0;
  double lower_bound = 0.0;
  double upper_margin = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
};

// Checks beta(kappa_max)^2 F(.;0) <= F(.;kappa) and
// |F(.;kappa) - F(.;0)| <= max(beta(kappa_min)^2 - 1, 1 - beta(kappa_max)^2) |xi|^2.
SandwichReport sandwich_bounds_check(const BaseContext& base,
                                     const TangentTensor& xi,
                                     const TangentTensor& logs,
                                     const CurvatureSystem& sys);

struct DiscrepancyReport {
  double abs = 0.0;  // F(xi; kappa) - d(t, exp_p xi)^2
  double rel = 0.0;  // abs / |xi - log t|^3, 0/0 -> 0
};

DiscrepancyReport discrepancy(const MvTensor& t, const ManifoldPoint& p,
                              const TangentTensor& xi,
                              const CurvatureSystem& sys);

}  // namespace mantensor
