#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mantensor.h"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(os.good());
}

mt_approx_options make_options(const char* method, const int* rank,
                               int rank_len) {
  mt_approx_options opt{};
  opt.method = method;
  opt.rank = rank;
  opt.rank_len = rank_len;
  return opt;
}

}  // namespace

TEST_CASE("version, error classes, and the thread knob") {
  CHECK(std::strlen(mt_version()) > 0);
  CHECK(mt_status_class(MT_OK) == 0);
  CHECK(mt_status_class(MT_ERR_INVALID_ARGUMENT) == 1);
  CHECK(mt_status_class(MT_ERR_BAD_MAGIC) == 1);
  CHECK(mt_status_class(MT_ERR_CUT_LOCUS) == 2);
  CHECK(mt_status_class(MT_ERR_DIVERGED) == 2);

  int saved = mt_max_threads();
  mt_set_max_threads(2);
  CHECK(mt_max_threads() == 2);
  mt_set_max_threads(saved);
}

TEST_CASE("tensor lifecycle, accessors, and validation") {
  int shape[2] = {2, 3};
  std::vector<double> coords(6 * 2);
  for (size_t i = 0; i < coords.size(); ++i) coords[i] = 0.5 * i;

  mt_tensor* t = nullptr;
  REQUIRE(mt_tensor_new(MT_MANIFOLD_EUCLIDEAN, 2, shape, 2, coords.data(),
                        &t) == MT_OK);
  REQUIRE(t != nullptr);

  mt_manifold_kind kind;
  int dim = 0, emb = 0, order = 0;
  int64_t entries = 0;
  CHECK(mt_tensor_kind(t, &kind) == MT_OK);
  CHECK(kind == MT_MANIFOLD_EUCLIDEAN);
  CHECK(mt_tensor_dim(t, &dim) == MT_OK);
  CHECK(dim == 2);
  CHECK(mt_tensor_embedding_dim(t, &emb) == MT_OK);
  CHECK(emb == 2);
  CHECK(mt_tensor_order(t, &order) == MT_OK);
  CHECK(order == 2);
  CHECK(mt_tensor_num_entries(t, &entries) == MT_OK);
  CHECK(entries == 6);

  int got_shape[2] = {0, 0};
  CHECK(mt_tensor_shape(t, got_shape, 2) == MT_OK);
  CHECK(got_shape[0] == 2);
  CHECK(got_shape[1] == 3);
  CHECK(mt_tensor_shape(t, got_shape, 1) == MT_ERR_INVALID_ARGUMENT);

  std::vector<double> back(coords.size());
  CHECK(mt_tensor_coords(t, back.data(), back.size()) == MT_OK);
  CHECK(std::memcmp(back.data(), coords.data(),
                    coords.size() * sizeof(double)) == 0);
  CHECK(mt_tensor_coords(t, back.data(), 3) == MT_ERR_INVALID_ARGUMENT);

  mt_point* p = nullptr;
  REQUIRE(mt_tensor_entry_point(t, 4, &p) == MT_OK);
  double pc[2];
  CHECK(mt_point_coords(p, pc, 2) == MT_OK);
  CHECK(pc[0] == coords[8]);
  CHECK(pc[1] == coords[9]);
  mt_point_free(p);
  CHECK(mt_tensor_entry_point(t, 6, &p) == MT_ERR_INVALID_ARGUMENT);
  mt_tensor_free(t);

  // sphere points must be unit length
  int one = 2;
  double off_sphere[3] = {1.0, 1.0, 0.0};
  mt_tensor* bad = nullptr;
  mt_status s = mt_tensor_new(MT_MANIFOLD_SPHERE, 2, &one, 1, off_sphere, &bad);
  CHECK(s == MT_ERR_INVARIANT_VIOLATION);
  CHECK(bad == nullptr);
  CHECK(std::strlen(mt_last_error()) > 0);

  CHECK(mt_tensor_new(MT_MANIFOLD_EUCLIDEAN, 2, nullptr, 1, off_sphere,
                      &bad) == MT_ERR_INVALID_ARGUMENT);
  CHECK(mt_tensor_new(MT_MANIFOLD_EUCLIDEAN, 2, &one, 1, off_sphere, nullptr) ==
        MT_ERR_INVALID_ARGUMENT);
  CHECK(mt_tensor_dim(nullptr, &dim) == MT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("generators produce valid manifold data") {
  mt_tensor* t = nullptr;
  REQUIRE(mt_generate_sphere1d(6, 0.0, 1, &t) == MT_OK);
  int emb = 0;
  int64_t n = 0;
  CHECK(mt_tensor_embedding_dim(t, &emb) == MT_OK);
  CHECK(emb == 7);
  CHECK(mt_tensor_num_entries(t, &n) == MT_OK);
  CHECK(n == 6);
  std::vector<double> coords(6 * 7);
  REQUIRE(mt_tensor_coords(t, coords.data(), coords.size()) == MT_OK);
  CHECK(coords[0] == 1.0);  // angle zero starts the circle
  for (int e = 0; e < 6; ++e) {
    double norm2 = 0.0;
    for (int c = 0; c < 7; ++c) norm2 += coords[e * 7 + c] * coords[e * 7 + c];
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  mt_tensor_free(t);

  mt_tensor* s = nullptr;
  REQUIRE(mt_generate_spd1d(5, 1.0, 0.02, 3, &s) == MT_OK);
  mt_manifold_kind kind;
  CHECK(mt_tensor_kind(s, &kind) == MT_OK);
  CHECK(kind == MT_MANIFOLD_SPD);
  mt_tensor_free(s);

  mt_tensor* bad = nullptr;
  CHECK(mt_generate_sphere1d(0, 0.0, 1, &bad) == MT_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
}

TEST_CASE("mvt files round-trip through the c api") {
  mt_tensor* t = nullptr;
  REQUIRE(mt_generate_sphere1d(4, 0.0, 7, &t) == MT_OK);
  REQUIRE(mt_write_mvt("capi_rt.mvt", t) == MT_OK);

  mt_tensor* back = nullptr;
  REQUIRE(mt_read_mvt("capi_rt.mvt", 0, &back) == MT_OK);
  std::vector<double> a(4 * 7), b(4 * 7);
  REQUIRE(mt_tensor_coords(t, a.data(), a.size()) == MT_OK);
  REQUIRE(mt_tensor_coords(back, b.data(), b.size()) == MT_OK);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  mt_tensor_free(back);
  mt_tensor_free(t);

  std::string bytes = slurp("capi_rt.mvt");

  // denting one coordinate breaks validation unless repair is on
  std::string dented = bytes;
  double two = 2.0;
  std::memcpy(dented.data() + 32 + 2 * 7 * 8, &two, 8);
  spit("capi_rt.mvt", dented);
  mt_tensor* r = nullptr;
  CHECK(mt_read_mvt("capi_rt.mvt", 0, &r) == MT_ERR_INVARIANT_VIOLATION);
  CHECK(r == nullptr);
  REQUIRE(mt_read_mvt("capi_rt.mvt", 1, &r) == MT_OK);
  std::vector<double> rc(4 * 7);
  REQUIRE(mt_tensor_coords(r, rc.data(), rc.size()) == MT_OK);
  double norm2 = 0.0;
  for (int c = 0; c < 7; ++c) norm2 += rc[2 * 7 + c] * rc[2 * 7 + c];
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
  mt_tensor_free(r);

  std::string wrong = bytes;
  wrong[0] = 'Z';
  spit("capi_rt.mvt", wrong);
  CHECK(mt_read_mvt("capi_rt.mvt", 0, &r) == MT_ERR_BAD_MAGIC);
  CHECK(std::string(mt_last_error()).find("magic") != std::string::npos);

  CHECK(mt_read_mvt("capi_missing.mvt", 0, &r) == MT_ERR_IO);
  std::remove("capi_rt.mvt");
}

TEST_CASE("spd volumes ingest through the c api") {
  std::vector<double> field(2 * 9, 0.0);
  for (int v = 0; v < 2; ++v)
    for (int i = 0; i < 3; ++i) field[v * 9 + i * 3 + i] = v + 1.0;
  std::ofstream os("capi_vol.raw", std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(field.data()),
           static_cast<std::streamsize>(field.size() * sizeof(double)));
  os.close();

  mt_tensor* t = nullptr;
  REQUIRE(mt_ingest_spd_image("capi_vol.raw", 2, 1, 1, 1, 2, 1, 1, 1, 1, 1e-6,
                              &t) == MT_OK);
  int64_t n = 0;
  CHECK(mt_tensor_num_entries(t, &n) == MT_OK);
  CHECK(n == 2);
  std::vector<double> coords(2 * 9);
  REQUIRE(mt_tensor_coords(t, coords.data(), coords.size()) == MT_OK);
  CHECK(coords[0] == doctest::Approx(1.0));
  CHECK(coords[9] == doctest::Approx(2.0));
  mt_tensor_free(t);

  mt_tensor* bad = nullptr;
  CHECK(mt_ingest_spd_image("capi_vol.raw", 2, 1, 1, 1, 3, 1, 1, 1, 1, 1e-6,
                            &bad) == MT_ERR_INVALID_ARGUMENT);
  std::remove("capi_vol.raw");
}

TEST_CASE("barycentres: closed form, defaults, and cut-locus reporting") {
  int three = 3;
  double coords[6] = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
  mt_tensor* t = nullptr;
  REQUIRE(mt_tensor_new(MT_MANIFOLD_EUCLIDEAN, 2, &three, 1, coords, &t) ==
          MT_OK);
  mt_point* p = nullptr;
  int iters = 0, warn = -1;
  double grad = -1.0;
  REQUIRE(mt_barycentre(t, 0.0, 0, &p, &iters, &grad, &warn) == MT_OK);
  double pc[2];
  REQUIRE(mt_point_coords(p, pc, 2) == MT_OK);
  CHECK(pc[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(pc[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iters >= 1);
  CHECK(grad >= 0.0);
  CHECK(warn == 0);
  mt_point_free(p);

  mt_point* q = nullptr;
  REQUIRE(mt_nearest_data_barycentre(t, &q) == MT_OK);
  double qc[2];
  REQUIRE(mt_point_coords(q, qc, 2) == MT_OK);
  // the winner is one of the data entries
  bool matches = false;
  for (int e = 0; e < 3; ++e)
    matches = matches || (qc[0] == coords[2 * e] && qc[1] == coords[2 * e + 1]);
  CHECK(matches);
  mt_point_free(q);
  mt_tensor_free(t);

  // antipodal sphere data has no log at the start point
  int two = 2;
  double anti[6] = {1.0, 0.0, 0.0, -1.0, 0.0, 0.0};
  mt_tensor* s = nullptr;
  REQUIRE(mt_tensor_new(MT_MANIFOLD_SPHERE, 2, &two, 1, anti, &s) == MT_OK);
  mt_point* sp = nullptr;
  mt_status st = mt_barycentre(s, 0.0, 0, &sp, nullptr, nullptr, nullptr);
  CHECK(st == MT_ERR_CUT_LOCUS);
  CHECK(mt_status_class(st) == 2);
  mt_tensor_free(s);

  CHECK(mt_barycentre(nullptr, 0.0, 0, &sp, nullptr, nullptr, nullptr) ==
        MT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("approximation results expose a report and the core") {
  mt_tensor* t = nullptr;
  REQUIRE(mt_generate_spd1d(10, 1.0, 0.03, 11, &t) == MT_OK);
  mt_point* base = nullptr;
  REQUIRE(mt_barycentre(t, 0.0, 500, &base, nullptr, nullptr, nullptr) ==
          MT_OK);

  int rank = 2;
  mt_approx_options opt = make_options("cc", &rank, 1);
  mt_approx_result* res = nullptr;
  REQUIRE(mt_approximate(t, base, &opt, &res) == MT_OK);

  mt_report* rep = nullptr;
  REQUIRE(mt_approx_result_report(res, &rep) == MT_OK);
  int rows = 0;
  CHECK(mt_report_num_rows(rep, &rows) == MT_OK);
  CHECK(rows == 1);
  const char* method = nullptr;
  CHECK(mt_report_row_method(rep, 0, &method) == MT_OK);
  CHECK(std::string(method) == "cc");
  int rbuf[4] = {0};
  int rlen = 0;
  CHECK(mt_report_row_rank(rep, 0, rbuf, 4, &rlen) == MT_OK);
  CHECK(rlen == 1);
  CHECK(rbuf[0] == 2);
  double eps = -1.0, delta = 0.0, lb = -1.0;
  int has = 0;
  CHECK(mt_report_row_eps_rel(rep, 0, &eps) == MT_OK);
  CHECK(eps >= 0.0);
  CHECK(eps < 1.0);
  CHECK(mt_report_row_lower_bound(rep, 0, &lb) == MT_OK);
  CHECK(lb <= eps + 1e-6);
  CHECK(mt_report_row_delta_rel(rep, 0, &delta, &has) == MT_OK);
  CHECK(has == 1);
  CHECK(mt_report_row_eps_rel(rep, 1, &eps) == MT_ERR_INVALID_ARGUMENT);
  mt_report_free(rep);

  mt_tensor* core = nullptr;
  REQUIRE(mt_approx_result_core(res, &core) == MT_OK);
  mt_manifold_kind kind;
  int emb = 0, order = 0, cshape[1] = {0};
  CHECK(mt_tensor_kind(core, &kind) == MT_OK);
  CHECK(kind == MT_MANIFOLD_EUCLIDEAN);
  CHECK(mt_tensor_embedding_dim(core, &emb) == MT_OK);
  CHECK(emb == 9);  // tangent coordinates live in the embedding
  CHECK(mt_tensor_order(core, &order) == MT_OK);
  CHECK(order == 1);
  CHECK(mt_tensor_shape(core, cshape, 1) == MT_OK);
  CHECK(cshape[0] == 2);
  mt_tensor_free(core);
  mt_approx_result_free(res);

  mt_approx_options unknown = make_options("svd", &rank, 1);
  CHECK(mt_approximate(t, base, &unknown, &res) == MT_ERR_INVALID_ARGUMENT);
  CHECK(mt_approximate(t, base, nullptr, &res) == MT_ERR_INVALID_ARGUMENT);

  mt_point_free(base);
  mt_tensor_free(t);
}

TEST_CASE("rank sweeps and benchmarks come back as reports with csv") {
  mt_tensor* t = nullptr;
  REQUIRE(mt_generate_spd1d(8, 1.0, 0.03, 13, &t) == MT_OK);
  mt_point* base = nullptr;
  REQUIRE(mt_barycentre(t, 0.0, 500, &base, nullptr, nullptr, nullptr) ==
          MT_OK);

  int ranks[3] = {1, 0, 3};  // the middle tuple is invalid on purpose
  mt_approx_options opt = make_options("thosvd", nullptr, 0);
  mt_report* rep = nullptr;
  REQUIRE(mt_rank_sweep(t, base, &opt, ranks, 1, 3, &rep) == MT_OK);
  int rows = 0;
  CHECK(mt_report_num_rows(rep, &rows) == MT_OK);
  CHECK(rows == 3);
  double eps0 = 0.0, eps1 = 0.0, eps2 = 0.0;
  CHECK(mt_report_row_eps_rel(rep, 0, &eps0) == MT_OK);
  CHECK(mt_report_row_eps_rel(rep, 1, &eps1) == MT_OK);
  CHECK(mt_report_row_eps_rel(rep, 2, &eps2) == MT_OK);
  CHECK(std::isfinite(eps0));
  CHECK(std::isnan(eps1));
  CHECK(eps2 <= eps0 + 1e-12);

  char* csv = nullptr;
  REQUIRE(mt_report_to_csv(rep, &csv) == MT_OK);
  std::string text(csv);
  mt_string_free(csv);
  CHECK(text.rfind("method,rank,eps_rel", 0) == 0);

  REQUIRE(mt_report_write_csv("capi_rep.csv", rep) == MT_OK);
  CHECK(slurp("capi_rep.csv") == text);
  mt_report* back = nullptr;
  REQUIRE(mt_report_read_csv("capi_rep.csv", &back) == MT_OK);
  char* csv2 = nullptr;
  REQUIRE(mt_report_to_csv(back, &csv2) == MT_OK);
  CHECK(std::string(csv2) == text);
  mt_string_free(csv2);
  mt_report_free(back);
  mt_report_free(rep);
  std::remove("capi_rep.csv");

  int good[2] = {1, 2};
  mt_report* bench = nullptr;
  REQUIRE(mt_benchmark(t, base, &opt, good, 1, 2, 1, &bench) == MT_OK);
  CHECK(mt_report_num_rows(bench, &rows) == MT_OK);
  CHECK(rows == 2);
  for (int i = 0; i < 2; ++i) {
    double time_s = 0.0;
    int has = 0;
    CHECK(mt_report_row_time_s(bench, i, &time_s, &has) == MT_OK);
    CHECK(has == 1);
    CHECK(time_s > 0.0);
  }
  mt_report_free(bench);

  CHECK(mt_rank_sweep(t, base, &opt, nullptr, 1, 1, &rep) ==
        MT_ERR_INVALID_ARGUMENT);
  mt_point_free(base);
  mt_tensor_free(t);
}
