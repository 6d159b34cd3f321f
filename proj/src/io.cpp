#include "mantensor/io.hpp"

#include <Eigen/Dense>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mantensor/errors.hpp"

namespace mantensor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr char kMagic[4] = {'M', 'V', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "file layout is little-endian; add byte swapping for this target");

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ShapeMismatchError("mvt: short read");
  return value;
}

std::uint32_t kind_code(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Euclidean: return 0;
    case ManifoldKind::Sphere: return 1;
    case ManifoldKind::Spd: return 2;
  }
  throw InvalidArgumentError("mvt: unknown manifold kind");
}

ManifoldKind kind_from_code(std::uint32_t c) {
  switch (c) {
    case 0: return ManifoldKind::Euclidean;
    case 1: return ManifoldKind::Sphere;
    case 2: return ManifoldKind::Spd;
  }
  throw ShapeMismatchError("mvt: unknown manifold kind code " +
                           std::to_string(c));
}

VectorXd repair_entry(const ManifoldDescriptor& m, VectorXd coords,
                      double clamp_rel) {
  if (m.kind == ManifoldKind::Sphere) {
    double n = coords.norm();
    if (n <= 0.0) throw InvariantViolationError("mvt: zero sphere point");
    coords /= n;
  } else if (m.kind == ManifoldKind::Spd) {
    int n = m.spd_size();
    MatrixXd a = Eigen::Map<const MatrixXd>(coords.data(), n, n);
    a = (0.5 * (a + a.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    VectorXd ev = es.eigenvalues();
    double top = ev.maxCoeff();
    double floor_val = clamp_rel * (top > 0.0 ? top : 1.0);
    for (int i = 0; i < n; ++i) ev(i) = std::max(ev(i), floor_val);
    MatrixXd fixed =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    fixed = (0.5 * (fixed + fixed.transpose())).eval();
    coords = Eigen::Map<const VectorXd>(fixed.data(), n * n);
  }
  return coords;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw IoError(std::string("csv: bad ") + what + " value '" + field + "'");
  return v;
}

long parse_long(const std::string& field, const char* what) {
  long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw IoError(std::string("csv: bad ") + what + " value '" + field + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void write_mvt(const std::string& path, const MvTensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("mvt: cannot open for write: " + path);
  os.write(kMagic, 4);
  put<std::uint8_t>(os, 1);  // little-endian
  put<std::uint8_t>(os, 1);  // version
  put<std::uint16_t>(os, 0);
  put<std::uint32_t>(os, kind_code(t.manifold.kind));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.manifold.dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.manifold.embedding_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  for (long e = 0; e < t.coords.rows(); ++e)
    for (long c = 0; c < t.coords.cols(); ++c) put<double>(os, t.coords(e, c));
  if (!os) throw IoError("mvt: write failed: " + path);
}

MvTensor read_mvt(const std::string& path, bool repair,
                  double repair_clamp_rel) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("mvt: cannot open for read: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw BadMagicError("mvt: bad magic in " + path);
  auto endian_tag = get<std::uint8_t>(is);
  if (endian_tag != 1)
    throw ShapeMismatchError("mvt: unsupported endianness tag");
  auto version = get<std::uint8_t>(is);
  if (version != 1)
    throw ShapeMismatchError("mvt: unsupported version " +
                             std::to_string(version));
  get<std::uint16_t>(is);  // reserved

  auto kind = kind_from_code(get<std::uint32_t>(is));
  auto dim = static_cast<int>(get<std::uint32_t>(is));
  auto emb = static_cast<int>(get<std::uint32_t>(is));
  auto order = static_cast<int>(get<std::uint32_t>(is));
  if (dim < 1 || emb < 1 || order < 1 || order > 64)
    throw ShapeMismatchError("mvt: implausible header dims");

  ManifoldDescriptor m;
  switch (kind) {
    case ManifoldKind::Euclidean: m = ManifoldDescriptor::euclidean(dim); break;
    case ManifoldKind::Sphere: m = ManifoldDescriptor::sphere(dim); break;
    case ManifoldKind::Spd: {
      int n = 1;
      while (n * (n + 1) / 2 < dim) ++n;
      m = ManifoldDescriptor::spd(n);
      break;
    }
  }
  if (m.dim != dim || m.embedding_dim != emb)
    throw ShapeMismatchError("mvt: header dims do not match manifold kind");

  std::vector<int> shape(order);
  long entries = 1;
  for (int k = 0; k < order; ++k) {
    auto s = get<std::uint64_t>(is);
    if (s < 1 || s > (1ull << 31))
      throw ShapeMismatchError("mvt: implausible shape extent");
    shape[k] = static_cast<int>(s);
    entries *= shape[k];
  }

  MvTensor t;
  t.manifold = m;
  t.shape = shape;
  t.coords.resize(entries, emb);
  for (long e = 0; e < entries; ++e)
    for (int c = 0; c < emb; ++c) t.coords(e, c) = get<double>(is);

  for (long e = 0; e < entries; ++e) {
    if (!t.coords.row(e).allFinite())
      throw InvariantViolationError("mvt: non-finite entry " +
                                    std::to_string(e));
    if (repair) {
      t.coords.row(e) =
          repair_entry(m, t.coords.row(e).transpose(), repair_clamp_rel)
              .transpose();
    } else {
      try {
        validate_point(t.point(e));
      } catch (const Error& err) {
        throw InvariantViolationError("mvt: entry " + std::to_string(e) +
                                      ": " + err.what());
      }
    }
  }
  return t;
}

MvTensor ingest_spd_image(const std::string& path, int x_dim, int y_dim,
                          int z_dim, int x0, int x1, int y0, int y1, int z0,
                          int z1, double clamp_rel) {
  if (x_dim < 1 || y_dim < 1 || z_dim < 1)
    throw InvalidArgumentError("ingest: non-positive volume dims");
  if (x0 < 1 || x1 > x_dim || x0 > x1 || y0 < 1 || y1 > y_dim || y0 > y1 ||
      z0 < 1 || z1 > z_dim || z0 > z1)
    throw InvalidArgumentError("ingest: crop out of bounds");
  if (!(clamp_rel > 0.0))
    throw InvalidArgumentError("ingest: clamp_rel must be positive");

  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("ingest: cannot open for read: " + path);

  long voxels = static_cast<long>(x_dim) * y_dim * z_dim;
  std::vector<double> field(static_cast<size_t>(voxels) * 9);
  is.read(reinterpret_cast<char*>(field.data()),
          static_cast<std::streamsize>(field.size() * sizeof(double)));
  if (is.gcount() !=
      static_cast<std::streamsize>(field.size() * sizeof(double)))
    throw ShapeMismatchError("ingest: file shorter than dims imply");

  int nx = x1 - x0 + 1, ny = y1 - y0 + 1, nz = z1 - z0 + 1;
  std::vector<int> shape;
  shape.push_back(nx);
  shape.push_back(ny);
  if (nz > 1) shape.push_back(nz);

  MvTensor t = make_mv_tensor(ManifoldDescriptor::spd(3), shape);
  long e = 0;
  for (int x = x0; x <= x1; ++x)
    for (int y = y0; y <= y1; ++y)
      for (int z = z0; z <= z1; ++z, ++e) {
        long v = ((static_cast<long>(x - 1) * y_dim) + (y - 1)) * z_dim +
                 (z - 1);
        Eigen::Map<const MatrixXd> raw(field.data() + v * 9, 3, 3);
        if (!raw.allFinite())
          throw NumericError("ingest: non-finite voxel at flat index " +
                             std::to_string(v));
        MatrixXd sym = 0.5 * (raw + raw.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
        VectorXd ev = es.eigenvalues();
        double top = ev.maxCoeff();
        double floor_val = clamp_rel * (top > 0.0 ? top : 1.0);
        for (int i = 0; i < 3; ++i) ev(i) = std::max(ev(i), floor_val);
        MatrixXd fixed = es.eigenvectors() * ev.asDiagonal() *
                         es.eigenvectors().transpose();
        fixed = (0.5 * (fixed + fixed.transpose())).eval();
        t.coords.row(e) = Eigen::Map<const Eigen::RowVectorXd>(fixed.data(), 9);
      }
  return t;
}

std::string report_to_csv(const SweepReport& report) {
  std::string out = "method,rank,eps_rel,delta_rel,lower_bound,time_s,iters\n";
  for (const auto& row : report.rows) {
    out += row.method;
    out += ',';
    for (size_t k = 0; k < row.rank.size(); ++k) {
      if (k) out += 'x';
      out += std::to_string(row.rank[k]);
    }
    out += ',';
    out += format_double(row.eps_rel);
    out += ',';
    if (row.delta_rel) out += format_double(*row.delta_rel);
    out += ',';
    out += format_double(row.lower_bound);
    out += ',';
    if (row.time_s) out += format_double(*row.time_s);
    out += ',';
    if (row.iterations) out += std::to_string(*row.iterations);
    out += '\n';
  }
  return out;
}

SweepReport report_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IoError("csv: empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "method,rank,eps_rel,delta_rel,lower_bound,time_s,iters")
    throw IoError("csv: unexpected header '" + line + "'");

  SweepReport report;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 7)
      throw IoError("csv: expected 7 fields, got " +
                    std::to_string(fields.size()));
    SweepRow row;
    row.method = fields[0];
    for (const auto& part : split(fields[1], 'x'))
      row.rank.push_back(static_cast<int>(parse_long(part, "rank")));
    row.eps_rel = parse_double(fields[2], "eps_rel");
    if (!fields[3].empty()) row.delta_rel = parse_double(fields[3], "delta_rel");
    row.lower_bound = parse_double(fields[4], "lower_bound");
    if (!fields[5].empty()) row.time_s = parse_double(fields[5], "time_s");
    if (!fields[6].empty()) row.iterations = parse_long(fields[6], "iters");
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report_csv(const std::string& path, const SweepReport& report) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("csv: cannot open for write: " + path);
  std::string text = report_to_csv(report);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("csv: write failed: " + path);
}

SweepReport read_report_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("csv: cannot open for read: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return report_from_csv(buf.str());
}

}  // namespace mantensor
