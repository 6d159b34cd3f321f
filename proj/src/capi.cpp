#include "mantensor.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "mantensor/errors.hpp"
#include "mantensor/experiments.hpp"
#include "mantensor/io.hpp"
#include "mantensor/parallel.hpp"

using namespace mantensor;

namespace {

thread_local std::string g_last_error;

mt_status status_from(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return MT_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return MT_ERR_DIMENSION_MISMATCH;
    case ErrorCode::CutLocus: return MT_ERR_CUT_LOCUS;
    case ErrorCode::NotConverged: return MT_ERR_NOT_CONVERGED;
    case ErrorCode::CurvatureTooLarge: return MT_ERR_CURVATURE_TOO_LARGE;
    case ErrorCode::NotPositiveDefinite: return MT_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::Diverged: return MT_ERR_DIVERGED;
    case ErrorCode::NoStableStep: return MT_ERR_NO_STABLE_STEP;
    case ErrorCode::Io: return MT_ERR_IO;
    case ErrorCode::BadMagic: return MT_ERR_BAD_MAGIC;
    case ErrorCode::ShapeMismatch: return MT_ERR_SHAPE_MISMATCH;
    case ErrorCode::InvariantViolation: return MT_ERR_INVARIANT_VIOLATION;
    case ErrorCode::Numeric: return MT_ERR_NUMERIC;
  }
  return MT_ERR_UNKNOWN;
}

mt_status fail(mt_status s, const char* msg) {
  g_last_error = msg;
  return s;
}

template <typename Fn>
mt_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MT_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MT_ERR_UNKNOWN;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MT_ERR_UNKNOWN;
  }
}

MvTensor* unwrap(mt_tensor* t) { return reinterpret_cast<MvTensor*>(t); }
const MvTensor* unwrap(const mt_tensor* t) {
  return reinterpret_cast<const MvTensor*>(t);
}
mt_tensor* wrap(MvTensor* t) { return reinterpret_cast<mt_tensor*>(t); }

ManifoldPoint* unwrap(mt_point* p) {
  return reinterpret_cast<ManifoldPoint*>(p);
}
const ManifoldPoint* unwrap(const mt_point* p) {
  return reinterpret_cast<const ManifoldPoint*>(p);
}
mt_point* wrap(ManifoldPoint* p) { return reinterpret_cast<mt_point*>(p); }

SweepReport* unwrap(mt_report* r) { return reinterpret_cast<SweepReport*>(r); }
const SweepReport* unwrap(const mt_report* r) {
  return reinterpret_cast<const SweepReport*>(r);
}
mt_report* wrap(SweepReport* r) { return reinterpret_cast<mt_report*>(r); }

struct ApproxHandle {
  ApproxResult result;
};

ApproxHandle* unwrap(mt_approx_result* r) {
  return reinterpret_cast<ApproxHandle*>(r);
}
const ApproxHandle* unwrap(const mt_approx_result* r) {
  return reinterpret_cast<const ApproxHandle*>(r);
}

struct ParsedOptions {
  Method method = Method::Thosvd;
  std::vector<int> rank;
  McRunOptions mc;
};

ParsedOptions parse_options(const mt_approx_options* opt) {
  if (!opt) throw InvalidArgumentError("options are required");
  if (!opt->method) throw InvalidArgumentError("options.method is required");
  ParsedOptions p;
  p.method = method_from_name(opt->method);
  if (opt->rank && opt->rank_len > 0)
    p.rank.assign(opt->rank, opt->rank + opt->rank_len);
  if (opt->mc_step > 0.0) p.mc.step = opt->mc_step;
  p.mc.grad_tol_rel = opt->mc_grad_tol_rel > 0.0 ? opt->mc_grad_tol_rel : 1e-2;
  p.mc.max_iter = opt->mc_max_iter > 0 ? opt->mc_max_iter : 1000;
  return p;
}

std::vector<std::vector<int>> parse_rank_list(const int* ranks, int rank_len,
                                              int num_ranks) {
  if (!ranks || rank_len < 1 || num_ranks < 1)
    throw InvalidArgumentError("rank list is required");
  std::vector<std::vector<int>> out(num_ranks);
  for (int i = 0; i < num_ranks; ++i)
    out[i].assign(ranks + i * rank_len, ranks + (i + 1) * rank_len);
  return out;
}

const SweepRow* row_at(const mt_report* r, int row) {
  const SweepReport* rep = unwrap(r);
  if (!rep) return nullptr;
  if (row < 0 || row >= static_cast<int>(rep->rows.size())) return nullptr;
  return &rep->rows[row];
}

}  // namespace

extern "C" {

const char* mt_version(void) { return "1.0.0"; }

const char* mt_last_error(void) { return g_last_error.c_str(); }

int mt_status_class(mt_status s) {
  switch (s) {
    case MT_OK:
      return 0;
    case MT_ERR_INVALID_ARGUMENT:
    case MT_ERR_DIMENSION_MISMATCH:
    case MT_ERR_IO:
    case MT_ERR_BAD_MAGIC:
    case MT_ERR_SHAPE_MISMATCH:
    case MT_ERR_INVARIANT_VIOLATION:
      return 1;
    default:
      return 2;
  }
}

void mt_set_max_threads(int n) { set_max_threads(n); }

int mt_max_threads(void) { return max_threads(); }

mt_status mt_tensor_new(mt_manifold_kind kind, int param, const int* shape,
                        int order, const double* coords, mt_tensor** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!shape || order < 1 || !coords)
    return fail(MT_ERR_INVALID_ARGUMENT, "shape and coords are required");
  return guarded([&] {
    ManifoldDescriptor m;
    switch (kind) {
      case MT_MANIFOLD_EUCLIDEAN: m = ManifoldDescriptor::euclidean(param); break;
      case MT_MANIFOLD_SPHERE: m = ManifoldDescriptor::sphere(param); break;
      case MT_MANIFOLD_SPD: m = ManifoldDescriptor::spd(param); break;
      default: throw InvalidArgumentError("unknown manifold kind");
    }
    auto t = std::make_unique<MvTensor>(
        make_mv_tensor(m, std::vector<int>(shape, shape + order)));
    for (long e = 0; e < t->num_entries(); ++e)
      for (int c = 0; c < t->manifold.embedding_dim; ++c)
        t->coords(e, c) = coords[e * t->manifold.embedding_dim + c];
    for (long e = 0; e < t->num_entries(); ++e) validate_point(t->point(e));
    *out = wrap(t.release());
  });
}

void mt_tensor_free(mt_tensor* t) { delete unwrap(t); }

mt_status mt_tensor_kind(const mt_tensor* t, mt_manifold_kind* out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  switch (unwrap(t)->manifold.kind) {
    case ManifoldKind::Euclidean: *out = MT_MANIFOLD_EUCLIDEAN; break;
    case ManifoldKind::Sphere: *out = MT_MANIFOLD_SPHERE; break;
    case ManifoldKind::Spd: *out = MT_MANIFOLD_SPD; break;
  }
  return MT_OK;
}

mt_status mt_tensor_dim(const mt_tensor* t, int* out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = unwrap(t)->manifold.dim;
  return MT_OK;
}

mt_status mt_tensor_embedding_dim(const mt_tensor* t, int* out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = unwrap(t)->manifold.embedding_dim;
  return MT_OK;
}

mt_status mt_tensor_order(const mt_tensor* t, int* out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = unwrap(t)->order();
  return MT_OK;
}

mt_status mt_tensor_shape(const mt_tensor* t, int* buf, int buf_len) {
  if (!t || !buf) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  const MvTensor* mt = unwrap(t);
  if (buf_len < mt->order())
    return fail(MT_ERR_INVALID_ARGUMENT, "shape buffer too small");
  for (int k = 0; k < mt->order(); ++k) buf[k] = mt->shape[k];
  return MT_OK;
}

mt_status mt_tensor_num_entries(const mt_tensor* t, int64_t* out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = unwrap(t)->num_entries();
  return MT_OK;
}

mt_status mt_tensor_coords(const mt_tensor* t, double* buf, int64_t buf_len) {
  if (!t || !buf) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  const MvTensor* mt = unwrap(t);
  int64_t need = mt->num_entries() * mt->manifold.embedding_dim;
  if (buf_len < need)
    return fail(MT_ERR_INVALID_ARGUMENT, "coords buffer too small");
  for (long e = 0; e < mt->num_entries(); ++e)
    for (int c = 0; c < mt->manifold.embedding_dim; ++c)
      buf[e * mt->manifold.embedding_dim + c] = mt->coords(e, c);
  return MT_OK;
}

mt_status mt_tensor_entry_point(const mt_tensor* t, int64_t index,
                                mt_point** out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const MvTensor* mt = unwrap(t);
    if (index < 0 || index >= mt->num_entries())
      throw InvalidArgumentError("entry index out of range");
    *out = wrap(new ManifoldPoint(mt->point(index)));
  });
}

mt_status mt_generate_sphere1d(int n, double noise_var, uint64_t seed,
                               mt_tensor** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guarded([&] {
    *out = wrap(new MvTensor(gen_sphere_1d(n, noise_var, seed)));
  });
}

mt_status mt_generate_spd1d(int n, double tau_var, double noise_var,
                            uint64_t seed, mt_tensor** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guarded([&] {
    *out = wrap(new MvTensor(gen_spd_1d(n, tau_var, noise_var, seed)));
  });
}

mt_status mt_read_mvt(const char* path, int repair, mt_tensor** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!path) return fail(MT_ERR_INVALID_ARGUMENT, "path is null");
  return guarded([&] {
    *out = wrap(new MvTensor(read_mvt(path, repair != 0)));
  });
}

mt_status mt_write_mvt(const char* path, const mt_tensor* t) {
  if (!path || !t) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { write_mvt(path, *unwrap(t)); });
}

mt_status mt_ingest_spd_image(const char* path, int x_dim, int y_dim,
                              int z_dim, int x0, int x1, int y0, int y1,
                              int z0, int z1, double clamp_rel,
                              mt_tensor** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!path) return fail(MT_ERR_INVALID_ARGUMENT, "path is null");
  return guarded([&] {
    *out = wrap(new MvTensor(ingest_spd_image(path, x_dim, y_dim, z_dim, x0,
                                              x1, y0, y1, z0, z1, clamp_rel)));
  });
}

void mt_point_free(mt_point* p) { delete unwrap(p); }

mt_status mt_point_embedding_dim(const mt_point* p, int* out) {
  if (!p || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = unwrap(p)->manifold.embedding_dim;
  return MT_OK;
}

mt_status mt_point_coords(const mt_point* p, double* buf, int buf_len) {
  if (!p || !buf) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  const ManifoldPoint* mp = unwrap(p);
  if (buf_len < mp->manifold.embedding_dim)
    return fail(MT_ERR_INVALID_ARGUMENT, "coords buffer too small");
  for (int c = 0; c < mp->manifold.embedding_dim; ++c) buf[c] = mp->coords(c);
  return MT_OK;
}

mt_status mt_barycentre(const mt_tensor* t, double tol, int max_iter,
                        mt_point** out, int* iterations, double* grad_norm,
                        int* hemisphere_warning) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    BarycentreResult r = barycentre(*unwrap(t), tol > 0.0 ? tol : 1e-9,
                                    max_iter > 0 ? max_iter : 200);
    if (iterations) *iterations = r.iterations;
    if (grad_norm) *grad_norm = r.grad_norm;
    if (hemisphere_warning) *hemisphere_warning = r.hemisphere_warning ? 1 : 0;
    *out = wrap(new ManifoldPoint(std::move(r.point)));
  });
}

mt_status mt_nearest_data_barycentre(const mt_tensor* t, mt_point** out) {
  if (!t || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = wrap(new ManifoldPoint(nearest_data_barycentre(*unwrap(t))));
  });
}

mt_status mt_approximate(const mt_tensor* t, const mt_point* base,
                         const mt_approx_options* opt,
                         mt_approx_result** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!t || !base) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ParsedOptions p = parse_options(opt);
    auto handle = std::make_unique<ApproxHandle>();
    handle->result =
        approximate(p.method, *unwrap(t), *unwrap(base), p.rank, p.mc);
    *out = reinterpret_cast<mt_approx_result*>(handle.release());
  });
}

void mt_approx_result_free(mt_approx_result* r) { delete unwrap(r); }

mt_status mt_approx_result_report(const mt_approx_result* r, mt_report** out) {
  if (!r || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto rep = std::make_unique<SweepReport>();
    rep->rows.push_back(unwrap(r)->result.row);
    *out = wrap(rep.release());
  });
}

mt_status mt_approx_result_core(const mt_approx_result* r, mt_tensor** out) {
  if (!r || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const TangentTensor& core = unwrap(r)->result.factors.core;
    auto t = std::make_unique<MvTensor>();
    t->manifold =
        ManifoldDescriptor::euclidean(core.base.manifold.embedding_dim);
    t->shape = core.shape;
    t->coords = core.coords;
    *out = wrap(t.release());
  });
}

mt_status mt_rank_sweep(const mt_tensor* t, const mt_point* base,
                        const mt_approx_options* opt, const int* ranks,
                        int rank_len, int num_ranks, mt_report** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!t || !base) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ParsedOptions p = parse_options(opt);
    auto list = parse_rank_list(ranks, rank_len, num_ranks);
    auto rep = std::make_unique<SweepReport>(
        run_rank_sweep(p.method, *unwrap(t), *unwrap(base), list, p.mc));
    *out = wrap(rep.release());
  });
}

mt_status mt_benchmark(const mt_tensor* t, const mt_point* base,
                       const mt_approx_options* opt, const int* ranks,
                       int rank_len, int num_ranks, int repeats,
                       mt_report** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!t || !base) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ParsedOptions p = parse_options(opt);
    auto list = parse_rank_list(ranks, rank_len, num_ranks);
    auto rep = std::make_unique<SweepReport>(
        run_rank_sweep(p.method, *unwrap(t), *unwrap(base), list, p.mc));
    for (size_t i = 0; i < list.size(); ++i) {
      BenchStats stats = benchmark(p.method, *unwrap(t), *unwrap(base),
                                   list[i], repeats, p.mc);
      rep->rows[i].time_s = stats.median_s;
    }
    *out = wrap(rep.release());
  });
}

void mt_report_free(mt_report* r) { delete unwrap(r); }

mt_status mt_report_num_rows(const mt_report* r, int* out) {
  if (!r || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = static_cast<int>(unwrap(r)->rows.size());
  return MT_OK;
}

mt_status mt_report_row_method(const mt_report* r, int row, const char** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  const SweepRow* sr = row_at(r, row);
  if (!sr) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *out = sr->method.c_str();
  return MT_OK;
}

mt_status mt_report_row_rank(const mt_report* r, int row, int* buf,
                             int buf_len, int* out_len) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !out_len) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *out_len = static_cast<int>(sr->rank.size());
  if (!buf) return MT_OK;
  if (buf_len < *out_len)
    return fail(MT_ERR_INVALID_ARGUMENT, "rank buffer too small");
  for (size_t k = 0; k < sr->rank.size(); ++k) buf[k] = sr->rank[k];
  return MT_OK;
}

mt_status mt_report_row_eps_rel(const mt_report* r, int row, double* out) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !out) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *out = sr->eps_rel;
  return MT_OK;
}

mt_status mt_report_row_lower_bound(const mt_report* r, int row, double* out) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !out) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *out = sr->lower_bound;
  return MT_OK;
}

mt_status mt_report_row_delta_rel(const mt_report* r, int row, double* out,
                                  int* has) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !has) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *has = sr->delta_rel ? 1 : 0;
  if (sr->delta_rel && out) *out = *sr->delta_rel;
  return MT_OK;
}

mt_status mt_report_row_time_s(const mt_report* r, int row, double* out,
                               int* has) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !has) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *has = sr->time_s ? 1 : 0;
  if (sr->time_s && out) *out = *sr->time_s;
  return MT_OK;
}

mt_status mt_report_row_iters(const mt_report* r, int row, int64_t* out,
                              int* has) {
  const SweepRow* sr = row_at(r, row);
  if (!sr || !has) return fail(MT_ERR_INVALID_ARGUMENT, "row out of range");
  *has = sr->iterations ? 1 : 0;
  if (sr->iterations && out) *out = *sr->iterations;
  return MT_OK;
}

mt_status mt_report_to_csv(const mt_report* r, char** out) {
  if (!r || !out) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::string text = report_to_csv(*unwrap(r));
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
    *out = buf;
  });
}

void mt_string_free(char* s) { delete[] s; }

mt_status mt_report_write_csv(const char* path, const mt_report* r) {
  if (!path || !r) return fail(MT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { write_report_csv(path, *unwrap(r)); });
}

mt_status mt_report_read_csv(const char* path, mt_report** out) {
  if (!out) return fail(MT_ERR_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (!path) return fail(MT_ERR_INVALID_ARGUMENT, "path is null");
  return guarded([&] {
    *out = wrap(new SweepReport(read_report_csv(path)));
  });
}

} /* extern "C" */
