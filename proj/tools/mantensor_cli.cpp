// Command-line front end. Talks to the library through the C interface only.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mantensor.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct TensorDeleter {
  void operator()(mt_tensor* t) const { mt_tensor_free(t); }
};
struct PointDeleter {
  void operator()(mt_point* p) const { mt_point_free(p); }
};
struct ReportDeleter {
  void operator()(mt_report* r) const { mt_report_free(r); }
};
using TensorPtr = std::unique_ptr<mt_tensor, TensorDeleter>;
using PointPtr = std::unique_ptr<mt_point, PointDeleter>;
using ReportPtr = std::unique_ptr<mt_report, ReportDeleter>;

// Exits the process on failure with the library's error classification.
void check(mt_status s, const char* what) {
  if (s == MT_OK) return;
  std::fprintf(stderr, "error: %s: %s\n", what, mt_last_error());
  std::exit(mt_status_class(s) == 1 ? kExitValidation : kExitNumeric);
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  std::exit(kExitValidation);
}

TensorPtr load_tensor(const std::string& path, bool repair) {
  mt_tensor* t = nullptr;
  check(mt_read_mvt(path.c_str(), repair ? 1 : 0, &t), "read tensor");
  return TensorPtr(t);
}

PointPtr tensor_entry(const mt_tensor* t, int64_t index) {
  mt_point* p = nullptr;
  check(mt_tensor_entry_point(t, index, &p), "extract entry");
  return PointPtr(p);
}

PointPtr resolve_base(const mt_tensor* t, const std::string& base_spec) {
  mt_point* p = nullptr;
  if (base_spec == "frechet") {
    int hemi = 0;
    check(mt_barycentre(t, 0.0, 0, &p, nullptr, nullptr, &hemi),
          "barycentre");
    if (hemi)
      std::fprintf(stderr,
                   "warning: data spreads beyond a hemisphere around the "
                   "barycentre; tangent logs may distort\n");
    return PointPtr(p);
  }
  if (base_spec == "nearest") {
    check(mt_nearest_data_barycentre(t, &p), "nearest-data barycentre");
    return PointPtr(p);
  }
  TensorPtr base_tensor = load_tensor(base_spec, false);
  return tensor_entry(base_tensor.get(), 0);
}

void print_point(const mt_point* p) {
  int emb = 0;
  check(mt_point_embedding_dim(p, &emb), "point dim");
  std::vector<double> coords(emb);
  check(mt_point_coords(p, coords.data(), emb), "point coords");
  for (int c = 0; c < emb; ++c)
    std::printf("%s%.17g", c ? " " : "", coords[c]);
  std::printf("\n");
}

void write_point_as_tensor(const std::string& path, const mt_tensor* like,
                           const mt_point* p) {
  mt_manifold_kind kind;
  int dim = 0, emb = 0;
  check(mt_tensor_kind(like, &kind), "tensor kind");
  check(mt_tensor_dim(like, &dim), "tensor dim");
  check(mt_tensor_embedding_dim(like, &emb), "tensor dim");
  int param = kind == MT_MANIFOLD_SPD
                  ? static_cast<int>(std::lround(std::sqrt(emb)))
                  : dim;
  std::vector<double> coords(emb);
  check(mt_point_coords(p, coords.data(), emb), "point coords");
  int shape[1] = {1};
  mt_tensor* out = nullptr;
  check(mt_tensor_new(kind, param, shape, 1, coords.data(), &out),
        "wrap point");
  TensorPtr holder(out);
  check(mt_write_mvt(path.c_str(), out), "write point");
}

long parse_int_field(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    usage_error(std::string("bad ") + what + " value '" + s + "'");
  }
}

double parse_tau(const std::string& s) {
  if (s == "auto") return 0.0;
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    usage_error("bad --tau value '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// One tuple per item: "3" expands to (3,...,3) over the tensor order, "2x4"
// is explicit, "1..5" and "1..9:2" are scalar ranges.
std::vector<std::vector<int>> parse_rank_list(const std::string& spec,
                                              int order) {
  std::vector<std::vector<int>> out;
  for (const std::string& item : split(spec, ',')) {
    if (item.empty()) usage_error("empty rank item in '" + spec + "'");
    size_t dots = item.find("..");
    if (dots != std::string::npos) {
      std::string tail = item.substr(dots + 2);
      long step = 1;
      size_t colon = tail.find(':');
      if (colon != std::string::npos) {
        step = parse_int_field(tail.substr(colon + 1), "rank step");
        tail = tail.substr(0, colon);
      }
      long a = parse_int_field(item.substr(0, dots), "rank");
      long b = parse_int_field(tail, "rank");
      if (step < 1 || a < 1 || b < a)
        usage_error("bad rank range '" + item + "'");
      for (long v = a; v <= b; v += step)
        out.emplace_back(order, static_cast<int>(v));
      continue;
    }
    if (item.find('x') != std::string::npos) {
      std::vector<int> tuple;
      for (const std::string& part : split(item, 'x'))
        tuple.push_back(static_cast<int>(parse_int_field(part, "rank")));
      if (static_cast<int>(tuple.size()) != order)
        usage_error("rank tuple '" + item + "' does not match tensor order " +
                    std::to_string(order));
      out.push_back(std::move(tuple));
      continue;
    }
    long v = parse_int_field(item, "rank");
    if (v < 1) usage_error("bad rank '" + item + "'");
    out.emplace_back(order, static_cast<int>(v));
  }
  if (out.empty()) usage_error("no ranks in '" + spec + "'");
  return out;
}

void print_report(const mt_report* rep) {
  char* csv = nullptr;
  check(mt_report_to_csv(rep, &csv), "format report");
  std::fputs(csv, stdout);
  mt_string_free(csv);
}

mt_approx_options make_options(const std::string& method,
                               const std::vector<int>& rank, double mc_step,
                               int max_iter) {
  mt_approx_options opt{};
  opt.method = method.c_str();
  opt.rank = rank.empty() ? nullptr : rank.data();
  opt.rank_len = static_cast<int>(rank.size());
  opt.mc_step = mc_step;
  opt.mc_grad_tol_rel = 0.0;
  opt.mc_max_iter = max_iter;
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tangent-space Tucker approximation of manifold-valued "
               "tensors"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "cap worker threads (default: MANTENSOR_THREADS or 1)");

  // generate
  auto* gen = app.add_subcommand("generate", "synthesise a test tensor");
  std::string gen_kind;
  gen->add_option("kind", gen_kind, "sphere1d or spd1d")->required();
  int gen_n = 100;
  double gen_noise = 0.05, gen_tau_var = 2.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "number of entries");
  gen->add_option("--noise-var", gen_noise, "tangent noise variance");
  gen->add_option("--tau-var", gen_tau_var, "spd1d signal variance");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output .mvt path")->required();

  // barycentre
  auto* bary = app.add_subcommand("barycentre", "intrinsic mean of entries");
  std::string bary_file, bary_out;
  bool bary_nearest = false;
  bary->add_option("file", bary_file, "input .mvt")->required();
  bary->add_flag("--nearest-data", bary_nearest,
                 "pick the best data entry instead of iterating");
  bary->add_option("--out", bary_out, "also write the point as a 1-entry .mvt");

  // approximate
  auto* approx = app.add_subcommand("approximate", "fit one rank tuple");
  std::string ap_file, ap_method, ap_rank = "full", ap_base = "frechet";
  std::string ap_tau = "auto", ap_out_core, ap_out_report;
  int ap_max_iter = 1000;
  approx->add_option("file", ap_file, "input .mvt")->required();
  approx->add_option("--method", ap_method, "thosvd, cc or mc")->required();
  approx->add_option("--rank", ap_rank, "r1[,r2,...] or 'full'");
  approx->add_option("--base", ap_base, "frechet, nearest, or a .mvt file");
  approx->add_option("--tau", ap_tau, "descent step for mc, or 'auto'");
  approx->add_option("--max-iter", ap_max_iter, "descent iteration cap");
  approx->add_option("--out-core", ap_out_core,
                     "write core coefficients as a euclidean .mvt");
  approx->add_option("--out-report", ap_out_report, "write the report row");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "error metrics across ranks");
  std::string sw_file, sw_method, sw_ranks, sw_base = "frechet", sw_out;
  std::string sw_tau = "auto";
  int sw_max_iter = 1000;
  sweep->add_option("file", sw_file, "input .mvt")->required();
  sweep->add_option("--method", sw_method, "thosvd, cc or mc")->required();
  sweep->add_option("--ranks", sw_ranks, "a..b[:step] | r1,r2,... | r1xr2,...")
      ->required();
  sweep->add_option("--base", sw_base, "frechet, nearest, or a .mvt file");
  sweep->add_option("--tau", sw_tau, "descent step for mc, or 'auto'");
  sweep->add_option("--max-iter", sw_max_iter, "descent iteration cap");
  sweep->add_option("--out", sw_out, "output CSV path");

  // bench
  auto* bench = app.add_subcommand("bench", "time the pipeline across ranks");
  std::string bn_file, bn_method, bn_ranks, bn_base = "frechet", bn_out;
  std::string bn_tau = "auto";
  int bn_repeats = 10, bn_max_iter = 1000;
  bench->add_option("file", bn_file, "input .mvt")->required();
  bench->add_option("--method", bn_method, "thosvd, cc or mc")->required();
  bench->add_option("--ranks", bn_ranks, "a..b[:step] | r1,r2,... | r1xr2,...")
      ->required();
  bench->add_option("--repeats", bn_repeats, "timed repetitions per rank");
  bench->add_option("--base", bn_base, "frechet, nearest, or a .mvt file");
  bench->add_option("--tau", bn_tau, "descent step for mc, or 'auto'");
  bench->add_option("--max-iter", bn_max_iter, "descent iteration cap");
  bench->add_option("--out", bn_out, "output CSV path");

  // ingest-spd
  auto* ingest = app.add_subcommand("ingest-spd",
                                    "project a raw 3x3 voxel field onto spd");
  std::string in_file, in_dims, in_crop, in_out;
  double in_clamp = 1e-6;
  ingest->add_option("raw", in_file, "raw little-endian f64 voxel file")
      ->required();
  ingest->add_option("--dims", in_dims, "X,Y,Z volume extents")->required();
  ingest->add_option("--crop", in_crop, "x0:x1,y0:y1,z[0:z1] (1-based)")
      ->required();
  ingest->add_option("--clamp-rel", in_clamp, "eigenvalue floor relative to "
                                              "the largest eigenvalue");
  ingest->add_option("--out", in_out, "output .mvt path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (threads <= 0) {
    const char* env = std::getenv("MANTENSOR_THREADS");
    threads = env ? static_cast<int>(parse_int_field(env, "MANTENSOR_THREADS"))
                  : 1;
  }
  if (threads < 1) usage_error("--threads must be at least 1");
  mt_set_max_threads(threads);

  if (gen->parsed()) {
    mt_tensor* t = nullptr;
    if (gen_kind == "sphere1d") {
      check(mt_generate_sphere1d(gen_n, gen_noise, gen_seed, &t), "generate");
    } else if (gen_kind == "spd1d") {
      check(mt_generate_spd1d(gen_n, gen_tau_var, gen_noise, gen_seed, &t),
            "generate");
    } else {
      usage_error("unknown generator '" + gen_kind + "'");
    }
    TensorPtr holder(t);
    check(mt_write_mvt(gen_out.c_str(), t), "write tensor");
    return 0;
  }

  if (bary->parsed()) {
    TensorPtr t = load_tensor(bary_file, false);
    PointPtr p;
    if (bary_nearest) {
      mt_point* raw = nullptr;
      check(mt_nearest_data_barycentre(t.get(), &raw), "nearest-data");
      p.reset(raw);
    } else {
      mt_point* raw = nullptr;
      int iters = 0, hemi = 0;
      double grad = 0.0;
      check(mt_barycentre(t.get(), 0.0, 0, &raw, &iters, &grad, &hemi),
            "barycentre");
      p.reset(raw);
      if (hemi)
        std::fprintf(stderr,
                     "warning: data spreads beyond a hemisphere around the "
                     "barycentre\n");
      std::fprintf(stderr, "converged in %d iterations, gradient %.3e\n",
                   iters, grad);
    }
    print_point(p.get());
    if (!bary_out.empty()) write_point_as_tensor(bary_out, t.get(), p.get());
    return 0;
  }

  if (approx->parsed()) {
    TensorPtr t = load_tensor(ap_file, false);
    PointPtr base = resolve_base(t.get(), ap_base);
    std::vector<int> rank;
    if (ap_rank != "full") {
      int order = 0;
      check(mt_tensor_order(t.get(), &order), "tensor order");
      for (const std::string& part : split(ap_rank, ','))
        rank.push_back(static_cast<int>(parse_int_field(part, "rank")));
      if (static_cast<int>(rank.size()) == 1 && order > 1)
        rank.assign(order, rank[0]);
    }
    double tau = parse_tau(ap_tau);
    mt_approx_options opt = make_options(ap_method, rank, tau, ap_max_iter);
    mt_approx_result* res = nullptr;
    check(mt_approximate(t.get(), base.get(), &opt, &res), "approximate");
    std::unique_ptr<mt_approx_result, void (*)(mt_approx_result*)> holder(
        res, mt_approx_result_free);
    mt_report* rep = nullptr;
    check(mt_approx_result_report(res, &rep), "report");
    ReportPtr rep_holder(rep);
    print_report(rep);
    if (!ap_out_report.empty())
      check(mt_report_write_csv(ap_out_report.c_str(), rep), "write report");
    if (!ap_out_core.empty()) {
      mt_tensor* core = nullptr;
      check(mt_approx_result_core(res, &core), "core");
      TensorPtr core_holder(core);
      check(mt_write_mvt(ap_out_core.c_str(), core), "write core");
    }
    return 0;
  }

  if (sweep->parsed() || bench->parsed()) {
    bool timing = bench->parsed();
    const std::string& file = timing ? bn_file : sw_file;
    const std::string& method = timing ? bn_method : sw_method;
    const std::string& ranks_spec = timing ? bn_ranks : sw_ranks;
    const std::string& base_spec = timing ? bn_base : sw_base;
    const std::string& tau_spec = timing ? bn_tau : sw_tau;
    const std::string& out = timing ? bn_out : sw_out;
    int max_iter = timing ? bn_max_iter : sw_max_iter;

    TensorPtr t = load_tensor(file, false);
    int order = 0;
    check(mt_tensor_order(t.get(), &order), "tensor order");
    auto tuples = parse_rank_list(ranks_spec, order);
    std::vector<int> flat;
    for (const auto& tuple : tuples)
      flat.insert(flat.end(), tuple.begin(), tuple.end());

    PointPtr base = resolve_base(t.get(), base_spec);
    double tau = parse_tau(tau_spec);
    mt_approx_options opt = make_options(method, {}, tau, max_iter);
    mt_report* rep = nullptr;
    if (timing) {
      check(mt_benchmark(t.get(), base.get(), &opt, flat.data(), order,
                         static_cast<int>(tuples.size()), bn_repeats, &rep),
            "bench");
    } else {
      check(mt_rank_sweep(t.get(), base.get(), &opt, flat.data(), order,
                          static_cast<int>(tuples.size()), &rep),
            "sweep");
    }
    ReportPtr rep_holder(rep);
    print_report(rep);
    if (!out.empty()) check(mt_report_write_csv(out.c_str(), rep), "write csv");
    return 0;
  }

  if (ingest->parsed()) {
    auto dims = split(in_dims, ',');
    if (dims.size() != 3) usage_error("--dims needs X,Y,Z");
    int X = static_cast<int>(parse_int_field(dims[0], "dims"));
    int Y = static_cast<int>(parse_int_field(dims[1], "dims"));
    int Z = static_cast<int>(parse_int_field(dims[2], "dims"));

    auto crops = split(in_crop, ',');
    if (crops.size() != 3) usage_error("--crop needs x0:x1,y0:y1,z[0:z1]");
    int bounds[6];
    for (int k = 0; k < 3; ++k) {
      auto parts = split(crops[k], ':');
      if (parts.size() == 1) {
        bounds[2 * k] = bounds[2 * k + 1] =
            static_cast<int>(parse_int_field(parts[0], "crop"));
      } else if (parts.size() == 2) {
        bounds[2 * k] = static_cast<int>(parse_int_field(parts[0], "crop"));
        bounds[2 * k + 1] =
            static_cast<int>(parse_int_field(parts[1], "crop"));
      } else {
        usage_error("bad crop component '" + crops[k] + "'");
      }
    }

    mt_tensor* t = nullptr;
    check(mt_ingest_spd_image(in_file.c_str(), X, Y, Z, bounds[0], bounds[1],
                              bounds[2], bounds[3], bounds[4], bounds[5],
                              in_clamp, &t),
          "ingest");
    TensorPtr holder(t);
    check(mt_write_mvt(in_out.c_str(), t), "write tensor");
    return 0;
  }

  usage_error("no subcommand given");
}
