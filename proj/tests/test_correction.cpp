#include <cmath>

#include "doctest.h"
#include "mantensor/correction.hpp"

using namespace mantensor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPiSq = 9.869604401089358;

ManifoldPoint spd_identity() {
  VectorXd id = VectorXd::Zero(9);
  id[0] = id[4] = id[8] = 1.0;
  return {ManifoldDescriptor::spd(3), id};
}

MvTensor random_spd_tensor(const std::vector<int>& shape, double spread,
                           std::uint64_t seed) {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  MvTensor t = make_mv_tensor(p.manifold, shape);
  CounterRng rng(seed);
  for (std::int64_t e = 0; e < t.num_entries(); ++e)
    t.coords.row(e) = at.exp(at.random_tangent(spread, rng)).transpose();
  return t;
}

MvTensor random_euclidean_tensor(int dim, const std::vector<int>& shape,
                                 std::uint64_t seed) {
  MvTensor t = make_mv_tensor(ManifoldDescriptor::euclidean(dim), shape);
  CounterRng rng(seed);
  for (std::int64_t e = 0; e < t.num_entries(); ++e)
    for (int c = 0; c < dim; ++c) t.coords(e, c) = rng.next_normal();
  return t;
}

double max_core_diff(const TuckerFactors& a, const TuckerFactors& b) {
  return (a.core.coords - b.core.coords).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("beta hits its closed-form values") {
  CHECK(beta(0.0) == 1.0);
  CHECK(beta(-1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
  CHECK(beta(kPiSq) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(beta(kPiSq / 4.0) == doctest::Approx(2.0 / M_PI).epsilon(1e-14));
}

TEST_CASE("beta series branch is continuous and the function decreases") {
  for (double k : {1e-8, -1e-8, 9e-7, -9e-7}) {
    double s = std::sqrt(std::abs(k));
    double direct = k > 0 ? std::sin(s) / s : std::sinh(s) / s;
    CHECK(beta(k) == doctest::Approx(direct).epsilon(1e-12));
  }
  double prev = beta(-25.0);
  for (double k = -24.9; k <= kPiSq; k += 0.1) {
    double cur = beta(k);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("curvature system: euclidean flat, sphere and spd closed forms") {
  MvTensor t = random_euclidean_tensor(4, {3}, 5);
  ManifoldPoint p{t.manifold, VectorXd::Zero(4)};
  CurvatureSystem sys = build_curvature_system(p, t);
  CHECK(sys.kappas.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.kappa_max() == 0.0);

  // sphere entry at distance pi/2: curvature d^2 = pi^2/4 off the geodesic
  ManifoldDescriptor sm = ManifoldDescriptor::sphere(3);
  VectorXd pole = VectorXd::Zero(4);
  pole[0] = 1.0;
  MvTensor s = make_mv_tensor(sm, {1});
  s.coords(0, 1) = 1.0;  // quarter turn from the pole
  CurvatureSystem ssys = build_curvature_system({sm, pole}, s);
  CHECK(ssys.kappas(0, 0) == doctest::Approx(0.0).scale(1.0));
  for (int j = 1; j < 3; ++j)
    CHECK(ssys.kappas(0, j) == doctest::Approx(kPiSq / 4.0).epsilon(1e-10));

  // spd log with whitened eigen-gap 1 at distance 2 carries a -1 pair
  ManifoldPoint ip = spd_identity();
  BaseContext at(ip);
  MvTensor q = make_mv_tensor(ip.manifold, {1});
  VectorXd v = VectorXd::Zero(9);
  v[0] = 2.0;
  q.coords.row(0) = at.exp(v).transpose();
  CurvatureSystem qsys = build_curvature_system(ip, q);
  VectorXd expect(6);
  expect << 0, 0, 0, -1, -1, 0;
  for (int j = 0; j < 6; ++j)
    CHECK(qsys.kappas(0, j) == doctest::Approx(expect[j]).epsilon(1e-10).scale(1.0));

  // frames orthonormal in the base metric
  MvTensor r = random_spd_tensor({4}, 0.3, 19);
  BaseContext atr(spd_identity());
  CurvatureSystem rsys = build_curvature_system(atr, log_tensor(atr, r));
  for (int e = 0; e < 4; ++e)
    for (int a = 0; a < 6; ++a)
      for (int b = a; b < 6; ++b)
        CHECK(atr.inner(rsys.thetas[e].row(a).transpose(),
                        rsys.thetas[e].row(b).transpose()) ==
              doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
}

TEST_CASE("cc_loss vanishes at the logs and collapses when flat") {
  MvTensor t = random_spd_tensor({2, 3}, 0.25, 7);
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);

  CHECK(cc_loss(at, logs, logs, sys) ==
        doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  // random offset: loss sandwiched by the extreme beta weights
  CounterRng rng(77);
  TangentTensor xi = logs;
  for (std::int64_t e = 0; e < xi.num_entries(); ++e)
    xi.coords.row(e) += at.random_tangent(0.05, rng).transpose();
  TangentTensor diff = xi;
  diff.coords -= logs.coords;
  double flat = tangent_norm(at, diff);
  flat *= flat;
  double f = cc_loss(at, xi, logs, sys);
  double blo = beta(sys.kappa_max());
  double bhi = beta(sys.kappa_min());
  CHECK(f >= blo * blo * flat - 1e-12);
  CHECK(f <= bhi * bhi * flat + 1e-12);

  // euclidean data: curvature weights are unit and the loss is the square
  MvTensor te = random_euclidean_tensor(3, {4}, 11);
  ManifoldPoint pe{te.manifold, VectorXd::Zero(3)};
  BaseContext ate(pe);
  TangentTensor loge = log_tensor(ate, te);
  CurvatureSystem syse = build_curvature_system(ate, loge);
  TangentTensor zero = loge;
  zero.coords.setZero();
  double n = tangent_norm(ate, loge);
  CHECK(cc_loss(ate, zero, loge, syse) ==
        doctest::Approx(n * n).epsilon(1e-10));
  CHECK(cc_loss(zero, te, syse) == doctest::Approx(n * n).epsilon(1e-10));
}

TEST_CASE("dense B matches the definition built from scratch") {
  MvTensor t = random_spd_tensor({3, 2}, 0.2, 23);
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);
  TuckerFactors f = truncate(thosvd(at, logs), {2, 2});

  BFactors b = build_B(at, f.factors, at.basis(), sys);
  MatrixXd dense = b.dense();
  REQUIRE(dense.rows() == 6 * 6);
  REQUIRE(dense.cols() == 4 * 6);

  MatrixXd kron = kronecker_product(f.factors);  // entries x prod(ranks)
  const MatrixXd& phi = at.basis();
  const int d = 6;
  for (std::int64_t e = 0; e < 6; ++e)
    for (int j = 0; j < d; ++j)
      for (std::int64_t c = 0; c < 4; ++c)
        for (int i = 0; i < d; ++i) {
          double expect = kron(e, c) * at.inner(phi.row(i).transpose(),
                                                sys.thetas[e].row(j).transpose());
          CHECK(dense(e * d + j, c * d + i) ==
                doctest::Approx(expect).epsilon(1e-10).scale(1.0));
        }
}

TEST_CASE("normal system: symmetry, spectral floor, and the flat identity") {
  // euclidean: unit weights and orthonormal factors collapse A to identity
  MvTensor te = random_euclidean_tensor(4, {4, 3}, 3);
  ManifoldPoint pe{te.manifold, VectorXd::Zero(4)};
  BaseContext ate(pe);
  TangentTensor loge = log_tensor(ate, te);
  CurvatureSystem syse = build_curvature_system(ate, loge);
  TuckerFactors fe = truncate(thosvd(ate, loge), {2, 2});
  BFactors be = build_B(ate, fe.factors, ate.basis(), syse);
  NormalSystem nse = build_normal_system(be, syse, frame_coefficients(ate, loge, syse));
  REQUIRE(nse.is_dense());
  CHECK((nse.a - MatrixXd::Identity(nse.side(), nse.side())).norm() < 1e-9);

  // curved case: symmetric, and no eigenvalue below beta(kappa_max)^2
  MvTensor t = random_spd_tensor({3, 3}, 0.35, 29);
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);
  TuckerFactors f = truncate(thosvd(at, logs), {2, 1});
  BFactors b = build_B(at, f.factors, at.basis(), sys);
  NormalSystem ns = build_normal_system(b, sys, frame_coefficients(at, logs, sys));
  REQUIRE(ns.is_dense());
  CHECK((ns.a - ns.a.transpose()).norm() <= 1e-9);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(ns.a);
  double bmax = beta(sys.kappa_max());
  CHECK(es.eigenvalues().minCoeff() >= bmax * bmax - 1e-8);

  // A against the dense factorisation it summarises
  MatrixXd dense = b.dense();
  VectorXd w(dense.rows());
  for (std::int64_t e = 0; e < 9; ++e)
    for (int j = 0; j < 6; ++j) w[e * 6 + j] = ns.beta_sq(e, j);
  MatrixXd a_ref = dense.transpose() * w.asDiagonal() * dense;
  CHECK((ns.a - a_ref).norm() < 1e-9);
}

TEST_CASE("solver routes agree: cholesky, cached-B gradients, factored") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);

  // small system: direct route against conjugate gradients on the operator
  MvTensor t = random_spd_tensor({4, 3}, 0.3, 31);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);
  TuckerFactors f = truncate(thosvd(at, logs), {1, 2});
  BFactors b = build_B(at, f.factors, at.basis(), sys);
  NormalSystem ns = build_normal_system(b, sys, frame_coefficients(at, logs, sys));
  REQUIRE(ns.is_dense());  // side 12
  long iters = -1;
  VectorXd direct = solve_normal_system(ns, &iters);
  CHECK(iters == -1);
  CHECK((ns.a * direct - ns.rhs).norm() <= 1e-8 * ns.rhs.norm());

  NormalSystem factored = ns;
  factored.a.resize(0, 0);
  VectorXd via_op = solve_normal_system(factored, &iters);
  CHECK(iters >= 0);
  CHECK((via_op - direct).norm() < 1e-7 * std::max(1.0, direct.norm()));

  // side 24 runs iteratively: cached prescaled rows against the factored form
  TuckerFactors f2 = truncate(thosvd(at, logs), {2, 2});
  BFactors b2 = build_B(at, f2.factors, at.basis(), sys);
  NormalSystem ns2 =
      build_normal_system(b2, sys, frame_coefficients(at, logs, sys));
  REQUIRE(!ns2.is_dense());
  REQUIRE(ns2.b_dense.size() > 0);
  VectorXd via_rows = solve_normal_system(ns2, &iters);
  CHECK(iters >= 0);
  NormalSystem stripped = ns2;
  stripped.b_dense.resize(0, 0);
  VectorXd via_factored = solve_normal_system(stripped, &iters);
  CHECK(iters >= 0);
  CHECK((via_rows - via_factored).norm() <
        1e-7 * std::max(1.0, via_rows.norm()));
  MatrixXd dense2 = b2.dense();
  VectorXd w2(dense2.rows());
  for (std::int64_t e = 0; e < 12; ++e)
    for (int j = 0; j < 6; ++j) w2[e * 6 + j] = ns2.beta_sq(e, j);
  MatrixXd a2 = dense2.transpose() * w2.asDiagonal() * dense2;
  CHECK((a2 * via_rows - ns2.rhs).norm() <= 1e-8 * ns2.rhs.norm());
}

TEST_CASE("cc core is optimal, euclidean-degenerate, and exact at full rank") {
  // euclidean: correction must reproduce the truncated core exactly
  MvTensor te = random_euclidean_tensor(5, {5, 4}, 13);
  ManifoldPoint pe{te.manifold, VectorXd::Zero(5)};
  BaseContext ate(pe);
  TangentTensor loge = log_tensor(ate, te);
  CurvatureSystem syse = build_curvature_system(ate, loge);
  TuckerFactors fulle = thosvd(ate, loge);
  for (int r = 1; r <= 3; ++r) {
    TuckerFactors trunc = truncate(fulle, {r, r});
    TuckerFactors cc = cc_correct_core(ate, trunc, loge, syse);
    CHECK(max_core_diff(cc, trunc) <= 1e-10);
  }

  // curved: corrected core never raises the corrected loss
  MvTensor t = random_spd_tensor({4, 4}, 0.3, 37);
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);
  TuckerFactors full = thosvd(at, logs);
  for (int r = 1; r <= 2; ++r) {
    TuckerFactors trunc = truncate(full, {r, r});
    TuckerFactors cc = cc_correct_core(at, trunc, logs, sys);
    double lcc = cc_loss(at, reconstruct(cc), logs, sys);
    double ltr = cc_loss(at, reconstruct(trunc), logs, sys);
    CHECK(lcc <= ltr + 1e-10);

    // stationarity: random perturbations of the coefficients increase it
    CounterRng rng(100 + r);
    for (int probe = 0; probe < 20; ++probe) {
      TuckerFactors bump = cc;
      for (Eigen::Index i = 0; i < bump.core.coords.size(); ++i)
        bump.core.coords.data()[i] += 1e-3 * rng.next_normal();
      CHECK(cc_loss(at, reconstruct(bump), logs, sys) >= lcc - 1e-12);
    }
  }

  // full rank reproduces the logs
  TuckerFactors cc_full = cc_thosvd(p, t, full.detected_ranks);
  TangentTensor back = reconstruct(cc_full);
  back.coords -= logs.coords;
  CHECK(tangent_norm(at, back) < 1e-8);
}

TEST_CASE("curvature at or past the weight zero raises") {
  ManifoldDescriptor sm = ManifoldDescriptor::sphere(3);
  VectorXd pole = VectorXd::Zero(4);
  pole[0] = 1.0;
  ManifoldPoint p{sm, pole};
  BaseContext at(p);
  TangentTensor logs;
  logs.base = p;
  logs.shape = {1};
  logs.coords = Eigen::MatrixXd::Zero(1, 4);
  logs.coords(0, 1) = 3.2;  // norm past pi, kappa past pi^2
  CurvatureSystem sys = build_curvature_system(at, logs);
  TuckerFactors f = thosvd(at, logs);
  CHECK_THROWS_AS(cc_correct_core(at, truncate(f, {1}), logs, sys),
                  CurvatureTooLargeError);
}

TEST_CASE("zero-delta lower bound follows beta") {
  CHECK(zero_delta_lower_bound(0.0, 2.5) == doctest::Approx(2.5));
  CHECK(zero_delta_lower_bound(kPiSq - 2e-9, 2.5) ==
        doctest::Approx(0.0).epsilon(1e-8).scale(1.0));
  double expect = (2.0 / M_PI) * (2.0 / M_PI) * 2.5;
  CHECK(zero_delta_lower_bound(kPiSq / 4.0, 2.5) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(zero_delta_lower_bound(0.0, -1.0), InvalidArgumentError);
}

TEST_CASE("sandwich bounds hold on random curved instances") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  CounterRng rng(55);
  for (int c = 0; c < 100; ++c) {
    MvTensor t = random_spd_tensor({3}, 0.3, 1000 + c);
    TangentTensor logs = log_tensor(at, t);
    CurvatureSystem sys = build_curvature_system(at, logs);
    TangentTensor xi = logs;
    for (std::int64_t e = 0; e < xi.num_entries(); ++e)
      xi.coords.row(e) += at.random_tangent(0.02, rng).transpose();
    SandwichReport rep = sandwich_bounds_check(at, xi, logs, sys);
    CHECK(rep.lower_ok);
    CHECK(rep.upper_ok);
  }

  // sphere side exercises the positive-curvature branch of the margin
  ManifoldDescriptor sm = ManifoldDescriptor::sphere(4);
  VectorXd pole = VectorXd::Zero(5);
  pole[0] = 1.0;
  ManifoldPoint sp{sm, pole};
  BaseContext ats(sp);
  for (int c = 0; c < 100; ++c) {
    MvTensor t = make_mv_tensor(sm, {3});
    for (int e = 0; e < 3; ++e)
      t.coords.row(e) = ats.exp(ats.random_tangent(0.1, rng)).transpose();
    TangentTensor logs = log_tensor(ats, t);
    CurvatureSystem sys = build_curvature_system(ats, logs);
    TangentTensor xi = logs;
    for (std::int64_t e = 0; e < 3; ++e)
      xi.coords.row(e) += ats.random_tangent(0.02, rng).transpose();
    SandwichReport rep = sandwich_bounds_check(ats, xi, logs, sys);
    CHECK(rep.lower_ok);
    CHECK(rep.upper_ok);
  }
}

TEST_CASE("discrepancy is zero at the logs and in flat space") {
  MvTensor t = random_spd_tensor({3}, 0.25, 61);
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  CurvatureSystem sys = build_curvature_system(at, logs);
  DiscrepancyReport rep = discrepancy(t, p, logs, sys);
  CHECK(rep.abs == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
  CHECK(rep.rel == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));

  MvTensor te = random_euclidean_tensor(3, {4}, 67);
  ManifoldPoint pe{te.manifold, VectorXd::Zero(3)};
  BaseContext ate(pe);
  TangentTensor loge = log_tensor(ate, te);
  CurvatureSystem syse = build_curvature_system(ate, loge);
  TangentTensor xi = loge;
  xi.coords *= 0.5;
  DiscrepancyReport repe = discrepancy(te, pe, xi, syse);
  CHECK(repe.abs == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
}

TEST_CASE("vanishing curvature closes the gap between cc and plain cores") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  MvTensor t = random_spd_tensor({6}, 1.2, 71);
  TangentTensor logs = log_tensor(at, t);

  auto gap_at_scale = [&](double s) {
    TangentTensor scaled = logs;
    scaled.coords *= s;
    CurvatureSystem sys = build_curvature_system(at, scaled);
    TuckerFactors full = thosvd(at, scaled);
    TuckerFactors trunc = truncate(full, {1});
    TuckerFactors cc = cc_correct_core(at, trunc, scaled, sys);
    double denom = trunc.core.coords.norm();
    return denom == 0.0 ? 0.0
                        : (cc.core.coords - trunc.core.coords).norm() / denom;
  };
  double g1 = gap_at_scale(1.0);
  double g01 = gap_at_scale(0.1);
  double g001 = gap_at_scale(0.01);
  CHECK(g01 < g1);
  CHECK(g001 < g01);
}
