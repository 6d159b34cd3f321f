#pragma once

#include <vector>

#include "mantensor/correction.hpp"

namespace mantensor {

// Core coefficients against a fixed tangent basis phi: values(c, i) is the
// coefficient of phi row i at core multi-index c (row-major).
struct CoefficientTensor {
  std::vector<int> ranks;
  int d = 0;
  Eigen::MatrixXd values;  // prod(ranks) x d
};

// Squared manifold distance between t and exp_p of the reconstruction of v
// through the given factors and basis.
double mc_loss(const BaseContext& base, const MvTensor& t,
               const std::vector<Eigen::MatrixXd>& factors,
               const Eigen::MatrixXd& phi, const CoefficientTensor& v);

// Exact gradient of mc_loss in the coefficients, via the Jacobi eigenframe
// of the displacement at each entry and its transport to the reconstruction.
Eigen::MatrixXd mc_gradient(const BaseContext& base, const MvTensor& t,
                            const std::vector<Eigen::MatrixXd>& factors,
                            const Eigen::MatrixXd& phi,
                            const CoefficientTensor& v);

struct McIterate {
  int iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct McOptions {
  double step = 1.0;
  double grad_tol_rel = 1e-2;  // stop at |grad| < grad_tol_rel * |grad_0|
  int max_iter = 1000;
};

struct McResult {
  TuckerFactors factors;  // best-seen iterate embedded as a core
  std::vector<McIterate> trace;
  bool converged = false;
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Fixed-step descent started from the truncated thosvd core. Keeps the
// best-seen coefficients; throws Diverged when the loss passes 10x the
// initial value or stops being finite.
McResult mc_thosvd(const ManifoldPoint& p, const MvTensor& t,
                   const std::vector<int>& ranks, const McOptions& opts);

// Largest step from {2^0, ..., 2^-20} whose first probe_iters descent
// iterations stay finite and below the divergence threshold.
double autotune_step(const ManifoldPoint& p, const MvTensor& t,
                     const std::vector<int>& ranks, int probe_iters = 20);

}  // namespace mantensor
