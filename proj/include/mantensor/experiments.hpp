#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mantensor/metric_descent.hpp"

namespace mantensor {

struct BarycentreResult {
  ManifoldPoint point;
  int iterations = 0;
  double grad_norm = 0.0;
  // set when a sphere iterate sees data beyond 1.5 * pi/2
  bool hemisphere_warning = false;
};

// Fixed-point iteration p <- exp_p(mean of log_p entries), started at the
// first entry. Throws NotConverged after max_iter.
BarycentreResult barycentre(const MvTensor& t, double tol = 1e-9,
                            int max_iter = 200);

// Data entry minimising the summed squared distances to all entries; ties
// resolve to the lowest flat index.
ManifoldPoint nearest_data_barycentre(const MvTensor& t);

// Unit-speed great circle sample on the sphere: first two coordinates trace
// the angle, the rest stay zero.
Eigen::VectorXd sphere_circle_signal(int ambient_dim, double angle);
// diag(1, e^tau, 1) flattened.
Eigen::VectorXd spd_axis_signal(double tau);

// n points on the great circle of S^6 at angles 2*pi*(i-1)/n with isotropic
// Gaussian tangent noise of the given per-coordinate variance.
MvTensor gen_sphere_1d(int n = 100, double noise_var = 0.05,
                       std::uint64_t seed = 0);

// n points exp_I(tau_i E22) on P(3) with tau_i ~ N(0, tau_var), plus
// isotropic Gaussian tangent noise at each clean entry.
MvTensor gen_spd_1d(int n = 100, double tau_var = 2.0, double noise_var = 0.05,
                    std::uint64_t seed = 0);

// d(t, exp_p xi)^2 / d(t, constant p)^2 with 0/0 -> 0.
double relative_error(const MvTensor& t, const ManifoldPoint& p,
                      const TangentTensor& xi);

enum class Method { Thosvd, Cc, Mc };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

struct SweepRow {
  std::string method;
  std::vector<int> rank;
  double eps_rel = 0.0;
  std::optional<double> delta_rel;
  double lower_bound = 0.0;
  std::optional<double> time_s;
  std::optional<long> iterations;
  // non-empty when the rank failed; eps_rel is NaN then and the sweep
  // carries on with the remaining ranks
  std::string error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  ManifoldDescriptor manifold = ManifoldDescriptor::euclidean(1);
  std::vector<int> shape;
  // filled by callers that know them; the csv layer does not serialise these
  std::string base_strategy;
  std::optional<std::uint64_t> seed;
};

struct McRunOptions {
  std::optional<double> step;  // unset: autotune per rank
  double grad_tol_rel = 1e-2;
  int max_iter = 1000;
};

// One row per rank tuple. delta_rel is populated for cc rows; iterations
// for mc rows and for cc rows solved iteratively. time_s stays empty here so
// reruns emit identical reports; benchmark carries the timings. A failing
// rank is recorded on its row instead of aborting the sweep. lower_bound on
// every row derives from the plain truncation error at the same rank.
SweepReport run_rank_sweep(Method method, const MvTensor& t,
                           const ManifoldPoint& p,
                           const std::vector<std::vector<int>>& ranks,
                           const McRunOptions& mc = {});

struct ApproxResult {
  SweepRow row;
  TuckerFactors factors;
  TangentTensor xi;
};

// Single-rank run that also hands back the fitted factors and tangent
// reconstruction. An empty rank keeps the detected ranks.
ApproxResult approximate(Method method, const MvTensor& t,
                         const ManifoldPoint& p, const std::vector<int>& rank,
                         const McRunOptions& mc = {});

struct BenchStats {
  double median_s = 0.0;
  double min_s = 0.0;
  int repeats = 0;
};

// Times the full pipeline for one rank tuple over the given repeats,
// sequentially and capped to one worker thread.
BenchStats benchmark(Method method, const MvTensor& t, const ManifoldPoint& p,
                     const std::vector<int>& rank, int repeats = 10,
                     const McRunOptions& mc = {});

}  // namespace mantensor
