#include <cmath>

#include "doctest.h"
#include "mantensor/tucker.hpp"

using namespace mantensor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ManifoldPoint spd_identity() {
  VectorXd id = VectorXd::Zero(9);
  id[0] = id[4] = id[8] = 1.0;
  return {ManifoldDescriptor::spd(3), id};
}

MvTensor random_sphere_tensor(const std::vector<int>& shape, double spread,
                              std::uint64_t seed) {
  ManifoldDescriptor m = ManifoldDescriptor::sphere(4);
  MvTensor t = make_mv_tensor(m, shape);
  VectorXd pole = VectorXd::Zero(5);
  pole[0] = 1.0;
  BaseContext at({m, pole});
  CounterRng rng(seed);
  for (std::int64_t e = 0; e < t.num_entries(); ++e)
    t.coords.row(e) = at.exp(at.random_tangent(spread, rng)).transpose();
  return t;
}

}  // namespace

TEST_CASE("gram_matrix equals the coefficient cross product") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  CounterRng rng(31);
  MvTensor t = make_mv_tensor(p.manifold, {3, 4});
  for (int e = 0; e < 12; ++e)
    t.coords.row(e) = at.exp(at.random_tangent(0.3, rng)).transpose();
  TangentTensor logs = log_tensor(at, t);

  for (int mode = 0; mode < 2; ++mode) {
    TangentTensor u = unfold(logs, mode);
    MatrixXd g = gram_matrix(at, u);
    REQUIRE(g.rows() == logs.shape[mode]);
    CHECK((g - g.transpose()).norm() < 1e-12);

    // stack basis coefficients of every slice entry; G must equal C C^T
    const MatrixXd& b = at.basis();
    int d = at.dim();
    std::int64_t cols = u.num_entries() / g.rows();
    MatrixXd c(g.rows(), cols * d);
    for (int r = 0; r < g.rows(); ++r)
      for (std::int64_t q = 0; q < cols; ++q)
        for (int j = 0; j < d; ++j)
          c(r, q * d + j) = at.inner(u.coords.row(r * cols + q).transpose(),
                                     b.row(j).transpose());
    CHECK((g - c * c.transpose()).norm() < 1e-10);
  }
}

TEST_CASE("constant tensor has mode rank one and a closed-form sigma") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  CounterRng rng(8);
  VectorXd v = at.random_tangent(0.2, rng);
  MvTensor t = make_mv_tensor(p.manifold, {3, 4});
  VectorXd x = at.exp(v);
  for (int e = 0; e < 12; ++e) t.coords.row(e) = x.transpose();

  double vn = at.norm(v);
  for (int mode = 0; mode < 2; ++mode) {
    ModeSvd s = tangent_svd(p, t, mode);
    CHECK(s.rank == 1);
    // all twelve entries carry the same vector
    CHECK(s.sigma[0] == doctest::Approx(vn * std::sqrt(12.0)).epsilon(1e-9));
  }

  // a zero mode keeps one placeholder column so cores stay representable
  MvTensor constant = make_mv_tensor(p.manifold, {3, 4});
  for (int e = 0; e < 12; ++e) constant.coords.row(e) = p.coords.transpose();
  ModeSvd zero = tangent_svd(p, constant, 0);
  CHECK(zero.rank == 0);
  CHECK(zero.u.cols() == 1);
  CHECK(zero.sigma[0] == 0.0);
  bool clamped = false;
  TuckerFactors f = truncate(thosvd(p, constant), {2, 2}, &clamped);
  CHECK(clamped);
  CHECK(f.kept_ranks() == std::vector<int>{1, 1});
  CHECK(reconstruct(f).coords.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("euclidean order-1 tangent svd equals the classical one") {
  ManifoldDescriptor m = ManifoldDescriptor::euclidean(5);
  ManifoldPoint p{m, VectorXd::Zero(5)};
  MvTensor t = make_mv_tensor(m, {6});
  CounterRng rng(21);
  for (int e = 0; e < 6; ++e)
    for (int c = 0; c < 5; ++c) t.coords(e, c) = rng.next_normal();

  ModeSvd s = tangent_svd(p, t, 0);
  Eigen::JacobiSVD<MatrixXd> svd(t.coords, Eigen::ComputeThinU);
  REQUIRE(s.rank == 5);
  for (int k = 0; k < 5; ++k)
    CHECK(s.sigma[k] == doctest::Approx(svd.singularValues()[k]).epsilon(1e-9));
  // columns agree up to the sign convention
  for (int k = 0; k < 5; ++k) {
    double dot = std::abs(s.u.col(k).dot(svd.matrixU().col(k)));
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("thosvd reconstructs exactly at full rank") {
  MvTensor t = random_sphere_tensor({4, 3}, 0.3, 44);
  ManifoldPoint p = t.point(0);
  BaseContext at(p);
  TangentTensor logs = log_tensor(at, t);
  TuckerFactors f = thosvd(at, logs);

  for (std::size_t k = 0; k < f.factors.size(); ++k) {
    const MatrixXd& u = f.factors[k];
    CHECK((u.transpose() * u - MatrixXd::Identity(u.cols(), u.cols())).norm() <
          1e-9);
  }
  TangentTensor back = reconstruct(f);
  TangentTensor diff = back;
  diff.coords -= logs.coords;
  CHECK(tangent_norm(at, diff) < 1e-9);
}

TEST_CASE("core slices are mutually orthogonal along each mode") {
  MvTensor t = random_sphere_tensor({4, 3}, 0.25, 17);
  ManifoldPoint p = t.point(2);
  BaseContext at(p);
  TuckerFactors f = thosvd(at, log_tensor(at, t));
  const TangentTensor& core = f.core;

  for (int mode = 0; mode < core.order(); ++mode) {
    TangentTensor u = unfold(core, mode);
    std::int64_t cols = u.num_entries() / core.shape[mode];
    for (int a = 0; a < core.shape[mode]; ++a)
      for (int b = a + 1; b < core.shape[mode]; ++b) {
        double dot = 0.0;
        for (std::int64_t q = 0; q < cols; ++q)
          dot += at.inner(u.coords.row(a * cols + q).transpose(),
                          u.coords.row(b * cols + q).transpose());
        CHECK(dot == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
      }
  }
}

TEST_CASE("exact low multilinear rank is detected") {
  ManifoldPoint p = spd_identity();
  BaseContext at(p);
  CounterRng rng(3);
  VectorXd v = at.random_tangent(0.1, rng);
  MvTensor t = make_mv_tensor(p.manifold, {4, 3});
  // entries along one geodesic: log coefficients factor as a_i * b_j
  VectorXd a(4), b(3);
  a << 1.0, 0.5, -0.25, 0.75;
  b << 1.0, -1.0, 0.5;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j)
      t.coords.row(i * 3 + j) = at.exp(a[i] * b[j] * v).transpose();

  TuckerFactors f = thosvd(at, log_tensor(at, t));
  CHECK(f.detected_ranks == std::vector<int>{1, 1});
}

TEST_CASE("truncate keeps leading directions, clamps, and rejects zeros") {
  MvTensor t = random_sphere_tensor({5, 4}, 0.3, 9);
  ManifoldPoint p = t.point(0);
  BaseContext at(p);
  TuckerFactors f = thosvd(at, log_tensor(at, t));

  TuckerFactors cut = truncate(f, {2, 2});
  CHECK(cut.core.shape == std::vector<int>{2, 2});
  CHECK(cut.factors[0].cols() == 2);
  CHECK((cut.factors[0] - f.factors[0].leftCols(2)).norm() == 0.0);

  bool clamped = false;
  TuckerFactors same = truncate(f, {100, 100}, &clamped);
  CHECK(clamped);
  CHECK(same.core.shape == f.core.shape);

  clamped = true;
  (void)truncate(f, f.detected_ranks, &clamped);
  CHECK_FALSE(clamped);

  CHECK_THROWS_AS(truncate(f, {0, 1}), InvalidArgumentError);
  CHECK_THROWS_AS(truncate(f, {1}), DimensionMismatchError);
}

TEST_CASE("order-1 truncation error matches the discarded spectrum") {
  ManifoldDescriptor m = ManifoldDescriptor::euclidean(5);
  ManifoldPoint p{m, VectorXd::Zero(5)};
  BaseContext at(p);
  MvTensor t = make_mv_tensor(m, {7});
  CounterRng rng(14);
  for (int e = 0; e < 7; ++e)
    for (int c = 0; c < 5; ++c) t.coords(e, c) = rng.next_normal();
  TangentTensor logs = log_tensor(at, t);
  TuckerFactors f = thosvd(at, logs);

  Eigen::JacobiSVD<MatrixXd> svd(t.coords,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  for (int r = 1; r <= f.detected_ranks[0]; ++r) {
    TangentTensor back = reconstruct(truncate(f, {r}));
    TangentTensor diff = back;
    diff.coords -= logs.coords;
    double discarded = 0.0;
    for (int k = r; k < f.detected_ranks[0]; ++k)
      discarded += f.singular_values[0][k] * f.singular_values[0][k];
    double err = tangent_norm(at, diff);
    CHECK(err == doctest::Approx(std::sqrt(discarded)).epsilon(1e-9).scale(1.0));

    // brute force: projecting onto any r of the singular directions never
    // beats keeping the leading ones
    int n = f.detected_ranks[0];
    for (int mask = 0; mask < (1 << n); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != r) continue;
      MatrixXd proj = MatrixXd::Zero(5, 5);
      for (int k = 0; k < n; ++k)
        if (mask & (1 << k))
          proj += svd.matrixV().col(k) * svd.matrixV().col(k).transpose();
      double alt = (t.coords - t.coords * proj).norm();
      CHECK(alt >= err - 1e-10);
    }
  }
}

TEST_CASE("reconstruct of a zeroed core is zero") {
  MvTensor t = random_sphere_tensor({3, 3}, 0.2, 2);
  ManifoldPoint p = t.point(1);
  BaseContext at(p);
  TuckerFactors f = thosvd(at, log_tensor(at, t));
  f.core.coords.setZero();
  CHECK(reconstruct(f).coords.norm() == 0.0);
}
