#include "mantensor/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mantensor/correction.hpp"
#include "mantensor/errors.hpp"
#include "mantensor/parallel.hpp"
#include "mantensor/rng.hpp"
#include "mantensor/tucker.hpp"

namespace mantensor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sum_sq_distance_to(const MvTensor& t, const ManifoldPoint& p) {
  BaseContext at_p(p);
  double s = 0.0;
  for (long e = 0; e < t.num_entries(); ++e) {
    double d = at_p.distance(t.coords.row(e).transpose());
    s += d * d;
  }
  return s;
}

}  // namespace

BarycentreResult barycentre(const MvTensor& t, double tol, int max_iter) {
  if (t.num_entries() == 0) throw InvalidArgumentError("barycentre: empty tensor");
  BarycentreResult out{t.point(0), 0, 0.0, false};
  double hemi = 1.5 * kPi / 2.0;
  for (int it = 1; it <= max_iter; ++it) {
    BaseContext at_p(out.point);
    VectorXd mean = VectorXd::Zero(t.manifold.embedding_dim);
    for (long e = 0; e < t.num_entries(); ++e) {
      VectorXd x = t.coords.row(e).transpose();
      if (t.manifold.kind == ManifoldKind::Sphere &&
          at_p.distance(x) > hemi)
        out.hemisphere_warning = true;
      mean += at_p.log(x);
    }
    mean /= static_cast<double>(t.num_entries());
    out.iterations = it;
    out.grad_norm = at_p.norm(mean);
    if (out.grad_norm < tol) return out;
    out.point.coords = at_p.exp(mean);
  }
  throw NotConvergedError("barycentre: no convergence after " +
                          std::to_string(max_iter) + " iterations");
}

ManifoldPoint nearest_data_barycentre(const MvTensor& t) {
  if (t.num_entries() == 0)
    throw InvalidArgumentError("nearest_data_barycentre: empty tensor");
  long best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (long e = 0; e < t.num_entries(); ++e) {
    double cost = sum_sq_distance_to(t, t.point(e));
    if (cost < best_cost) {
      best_cost = cost;
      best = e;
    }
  }
  return t.point(best);
}

VectorXd sphere_circle_signal(int ambient_dim, double angle) {
  if (ambient_dim < 2)
    throw InvalidArgumentError("sphere_circle_signal: ambient_dim < 2");
  VectorXd x = VectorXd::Zero(ambient_dim);
  x(0) = std::cos(angle);
  x(1) = std::sin(angle);
  return x;
}

VectorXd spd_axis_signal(double tau) {
  MatrixXd m = MatrixXd::Identity(3, 3);
  m(1, 1) = std::exp(tau);
  return Eigen::Map<const VectorXd>(m.data(), 9);
}

MvTensor gen_sphere_1d(int n, double noise_var, std::uint64_t seed) {
  if (n < 1) throw InvalidArgumentError("gen_sphere_1d: n < 1");
  MvTensor t = make_mv_tensor(ManifoldDescriptor::sphere(6), {n});
  CounterRng rng(seed);
  for (int i = 0; i < n; ++i) {
    double angle = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    ManifoldPoint clean{t.manifold, sphere_circle_signal(7, angle)};
    BaseContext at_clean(clean);
    VectorXd noise = at_clean.random_tangent(noise_var, rng);
    t.coords.row(i) = at_clean.exp(noise).transpose();
  }
  return t;
}

MvTensor gen_spd_1d(int n, double tau_var, double noise_var,
                    std::uint64_t seed) {
  if (n < 1) throw InvalidArgumentError("gen_spd_1d: n < 1");
  MvTensor t = make_mv_tensor(ManifoldDescriptor::spd(3), {n});
  CounterRng rng(seed);
  double tau_sd = std::sqrt(tau_var);
  for (int i = 0; i < n; ++i) {
    double tau = tau_sd * rng.next_normal();
    ManifoldPoint clean{t.manifold, spd_axis_signal(tau)};
    BaseContext at_clean(clean);
    VectorXd noise = at_clean.random_tangent(noise_var, rng);
    t.coords.row(i) = at_clean.exp(noise).transpose();
  }
  return t;
}

double relative_error(const MvTensor& t, const ManifoldPoint& p,
                      const TangentTensor& xi) {
  MvTensor approx = exp_tensor(p, xi);
  double num = tensor_distance(t, approx);
  double den = 0.0;
  {
    BaseContext at_p(p);
    for (long e = 0; e < t.num_entries(); ++e) {
      double d = at_p.distance(t.coords.row(e).transpose());
      den += d * d;
    }
  }
  num *= num;
  if (den == 0.0) return 0.0;
  return num / den;
}

Method method_from_name(const std::string& name) {
  if (name == "thosvd") return Method::Thosvd;
  if (name == "cc") return Method::Cc;
  if (name == "mc") return Method::Mc;
  throw InvalidArgumentError("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Thosvd: return "thosvd";
    case Method::Cc: return "cc";
    case Method::Mc: return "mc";
  }
  throw InvalidArgumentError("unknown method enum");
}

namespace {

struct SweepContext {
  BaseContext base;
  TangentTensor logs;
  TuckerFactors full;
  CurvatureSystem sys;

  SweepContext(const MvTensor& t, const ManifoldPoint& p)
      : base(p),
        logs(log_tensor(base, t)),
        full(thosvd(base, logs)),
        sys(build_curvature_system(base, logs)) {}
};

TangentTensor truncated_xi(const SweepContext& ctx,
                           const std::vector<int>& rank, bool* clamped) {
  TuckerFactors f = truncate(ctx.full, rank, clamped);
  return reconstruct(f);
}

TangentTensor cc_xi(const SweepContext& ctx, const std::vector<int>& rank,
                    long* iterations = nullptr) {
  TuckerFactors f = truncate(ctx.full, rank);
  f = cc_correct_core(ctx.base, f, ctx.logs, ctx.sys, iterations);
  return reconstruct(f);
}

TangentTensor mc_xi(const SweepContext& ctx, const MvTensor& t,
                    const std::vector<int>& rank, const McRunOptions& mc,
                    long* iterations) {
  double step =
      mc.step ? *mc.step : autotune_step(ctx.base.point(), t, rank);
  McOptions opt;
  opt.step = step;
  opt.grad_tol_rel = mc.grad_tol_rel;
  opt.max_iter = mc.max_iter;
  McResult r = mc_thosvd(ctx.base.point(), t, rank, opt);
  if (iterations) *iterations = r.iterations;
  return reconstruct(r.factors);
}

double naive_abs_error(const SweepContext& ctx, const TangentTensor& xi) {
  TangentTensor diff = xi;
  diff.coords -= ctx.logs.coords;
  return tangent_norm(ctx.base, diff) * tangent_norm(ctx.base, diff);
}

// Rank-r floor shared by every method: the curvature-blind bound evaluated
// at the plain truncation of the same rank, normalised like eps_rel.
double rank_lower_bound(const SweepContext& ctx, const std::vector<int>& rank,
                        double denom) {
  if (denom == 0.0) return 0.0;
  TangentTensor trunc = truncated_xi(ctx, rank, nullptr);
  double naive = naive_abs_error(ctx, trunc);
  return zero_delta_lower_bound(ctx.sys.kappa_max(), naive) / denom;
}

void check_row_consistency(const SweepRow& row) {
  if (!row.delta_rel || !(*row.delta_rel < 1e-3)) return;
  if (row.lower_bound > row.eps_rel + 1e-6)
    throw InvariantViolationError(
        "sweep row lower bound exceeds its relative error");
}

}  // namespace

ApproxResult approximate(Method method, const MvTensor& t,
                         const ManifoldPoint& p, const std::vector<int>& rank,
                         const McRunOptions& mc) {
  SweepContext ctx(t, p);
  std::vector<int> use = rank.empty() ? ctx.full.detected_ranks : rank;

  ApproxResult out{SweepRow{}, ctx.full, ctx.logs};
  out.row.method = method_name(method);
  out.row.rank = use;

  out.factors = truncate(ctx.full, use);
  switch (method) {
    case Method::Thosvd:
      break;
    case Method::Cc: {
      long iters = -1;
      out.factors =
          cc_correct_core(ctx.base, out.factors, ctx.logs, ctx.sys, &iters);
      if (iters >= 0) out.row.iterations = iters;
      break;
    }
    case Method::Mc: {
      double step = mc.step ? *mc.step : autotune_step(p, t, use);
      McOptions opt;
      opt.step = step;
      opt.grad_tol_rel = mc.grad_tol_rel;
      opt.max_iter = mc.max_iter;
      McResult r = mc_thosvd(p, t, use, opt);
      out.row.iterations = r.iterations;
      out.factors = std::move(r.factors);
      break;
    }
  }
  out.xi = reconstruct(out.factors);

  out.row.eps_rel = relative_error(t, p, out.xi);
  double denom = sum_sq_distance_to(t, p);
  out.row.lower_bound = rank_lower_bound(ctx, use, denom);
  if (method == Method::Cc) {
    DiscrepancyReport d = discrepancy(t, p, out.xi, ctx.sys);
    out.row.delta_rel = d.rel;
  }
  check_row_consistency(out.row);
  return out;
}

SweepReport run_rank_sweep(Method method, const MvTensor& t,
                           const ManifoldPoint& p,
                           const std::vector<std::vector<int>>& ranks,
                           const McRunOptions& mc) {
  SweepContext ctx(t, p);
  double denom = sum_sq_distance_to(t, p);

  SweepReport report;
  report.rows.reserve(ranks.size());
  report.manifold = t.manifold;
  report.shape = t.shape;
  for (const auto& rank : ranks) {
    SweepRow row;
    row.method = method_name(method);
    row.rank = rank;

    try {
      TangentTensor xi{ctx.base.point(), ctx.logs.shape,
                       MatrixXd::Zero(ctx.logs.coords.rows(),
                                      ctx.logs.coords.cols())};
      long iters = -1;
      bool clamped = false;
      switch (method) {
        case Method::Thosvd:
          xi = truncated_xi(ctx, rank, &clamped);
          break;
        case Method::Cc:
          xi = cc_xi(ctx, rank, &iters);
          break;
        case Method::Mc:
          xi = mc_xi(ctx, t, rank, mc, &iters);
          break;
      }
      if (iters >= 0) row.iterations = iters;

      row.eps_rel = relative_error(t, p, xi);
      row.lower_bound = rank_lower_bound(ctx, rank, denom);
      if (method == Method::Cc) {
        DiscrepancyReport d = discrepancy(t, p, xi, ctx.sys);
        row.delta_rel = d.rel;
      }
      check_row_consistency(row);
    } catch (const std::exception& ex) {
      row.error = ex.what();
      row.eps_rel = std::numeric_limits<double>::quiet_NaN();
      row.delta_rel.reset();
      row.iterations.reset();
      row.lower_bound = 0.0;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

BenchStats benchmark(Method method, const MvTensor& t, const ManifoldPoint& p,
                     const std::vector<int>& rank, int repeats,
                     const McRunOptions& mc) {
  if (repeats < 1) throw InvalidArgumentError("benchmark: repeats < 1");
  int saved = max_threads();
  set_max_threads(1);

  // autotune outside the timed region so mc timings cover the descent only
  McRunOptions mc_fixed = mc;
  if (method == Method::Mc && !mc_fixed.step)
    mc_fixed.step = autotune_step(p, t, rank);

  std::vector<double> times;
  times.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    auto begin = std::chrono::steady_clock::now();
    SweepContext ctx(t, p);
    bool clamped = false;
    switch (method) {
      case Method::Thosvd: {
        TangentTensor xi = truncated_xi(ctx, rank, &clamped);
        (void)xi;
        break;
      }
      case Method::Cc: {
        TangentTensor xi = cc_xi(ctx, rank);
        (void)xi;
        break;
      }
      case Method::Mc: {
        long iters = 0;
        TangentTensor xi = mc_xi(ctx, t, rank, mc_fixed, &iters);
        (void)xi;
        break;
      }
    }
    auto end = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(end - begin).count());
  }
  set_max_threads(saved);

  std::sort(times.begin(), times.end());
  BenchStats stats;
  stats.repeats = repeats;
  stats.min_s = times.front();
  size_t mid = times.size() / 2;
  stats.median_s = times.size() % 2 == 1
                       ? times[mid]
                       : 0.5 * (times[mid - 1] + times[mid]);
  return stats;
}

}  // namespace mantensor
