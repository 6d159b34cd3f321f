#include "mantensor/tensor.hpp"

#include <cmath>

#include "mantensor/parallel.hpp"

namespace mantensor {

namespace {

void check_shape(const std::vector<int>& shape) {
  if (shape.empty()) throw InvalidArgumentError("tensor shape must be non-empty");
  for (int d : shape)
    if (d < 1) throw InvalidArgumentError("tensor dimensions must be >= 1");
}

void check_coords(const Eigen::MatrixXd& coords, const std::vector<int>& shape,
                  int embedding_dim) {
  if (coords.rows() != shape_num_entries(shape) ||
      coords.cols() != embedding_dim)
    throw DimensionMismatchError("entry matrix does not match shape");
}

void check_mode(const std::vector<int>& shape, int mode) {
  if (mode < 0 || mode >= static_cast<int>(shape.size()))
    throw InvalidArgumentError("mode index out of range");
}

}  // namespace

std::int64_t shape_num_entries(const std::vector<int>& shape) {
  check_shape(shape);
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::int64_t flatten_index(const std::vector<int>& shape,
                           const std::vector<int>& idx) {
  if (idx.size() != shape.size())
    throw DimensionMismatchError("index order does not match shape");
  std::int64_t flat = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= shape[k])
      throw InvalidArgumentError("index out of bounds");
    flat = flat * shape[k] + idx[k];
  }
  return flat;
}

std::vector<int> unflatten_index(const std::vector<int>& shape,
                                 std::int64_t flat) {
  std::vector<int> idx(shape.size());
  for (std::size_t k = shape.size(); k-- > 0;) {
    idx[k] = static_cast<int>(flat % shape[k]);
    flat /= shape[k];
  }
  return idx;
}

std::int64_t MvTensor::num_entries() const { return shape_num_entries(shape); }

ManifoldPoint MvTensor::point(std::int64_t flat) const {
  return {manifold, coords.row(flat).transpose()};
}

void MvTensor::set_point(std::int64_t flat, const ManifoldPoint& p) {
  if (!(p.manifold == manifold))
    throw DimensionMismatchError("entry manifold does not match tensor");
  coords.row(flat) = p.coords.transpose();
}

std::int64_t TangentTensor::num_entries() const {
  return shape_num_entries(shape);
}

MvTensor make_mv_tensor(const ManifoldDescriptor& m,
                        const std::vector<int>& shape) {
  check_shape(shape);
  MvTensor t;
  t.manifold = m;
  t.shape = shape;
  t.coords = Eigen::MatrixXd::Zero(shape_num_entries(shape), m.embedding_dim);
  return t;
}

TangentTensor log_tensor(const BaseContext& base, const MvTensor& t) {
  if (!(t.manifold == base.manifold()))
    throw DimensionMismatchError("tensor manifold does not match base point");
  check_coords(t.coords, t.shape, t.manifold.embedding_dim);
  TangentTensor x;
  x.base = base.point();
  x.shape = t.shape;
  x.coords.resize(t.coords.rows(), t.coords.cols());
  parallel_for(t.coords.rows(), [&](std::int64_t e) {
    x.coords.row(e) = base.log(t.coords.row(e).transpose()).transpose();
  });
  return x;
}

MvTensor exp_tensor(const BaseContext& base, const TangentTensor& x) {
  if (!(x.base.manifold == base.manifold()))
    throw DimensionMismatchError("tangent manifold does not match base point");
  check_coords(x.coords, x.shape, x.base.manifold.embedding_dim);
  MvTensor t;
  t.manifold = base.manifold();
  t.shape = x.shape;
  t.coords.resize(x.coords.rows(), x.coords.cols());
  parallel_for(x.coords.rows(), [&](std::int64_t e) {
    t.coords.row(e) = base.exp(x.coords.row(e).transpose()).transpose();
  });
  return t;
}

TangentTensor log_tensor(const ManifoldPoint& p, const MvTensor& t) {
  return log_tensor(BaseContext(p), t);
}

MvTensor exp_tensor(const ManifoldPoint& p, const TangentTensor& x) {
  return exp_tensor(BaseContext(p), x);
}

double tensor_distance(const MvTensor& a, const MvTensor& b) {
  if (!(a.manifold == b.manifold) || a.shape != b.shape)
    throw DimensionMismatchError("tensors are not aligned");
  check_coords(a.coords, a.shape, a.manifold.embedding_dim);
  check_coords(b.coords, b.shape, b.manifold.embedding_dim);
  const std::int64_t m = a.num_entries();
  Eigen::VectorXd sq(m);
  parallel_for(m, [&](std::int64_t e) {
    BaseContext base({a.manifold, a.coords.row(e).transpose()});
    double d = base.distance(b.coords.row(e).transpose());
    sq[e] = d * d;
  });
  double total = 0.0;
  for (std::int64_t e = 0; e < m; ++e) total += sq[e];
  return std::sqrt(total);
}

double tangent_norm(const BaseContext& base, const TangentTensor& x) {
  check_coords(x.coords, x.shape, x.base.manifold.embedding_dim);
  const std::int64_t m = x.num_entries();
  double total = 0.0;
  for (std::int64_t e = 0; e < m; ++e) {
    Eigen::VectorXd v = x.coords.row(e).transpose();
    total += base.inner(v, v);
  }
  return std::sqrt(std::max(0.0, total));
}

double tangent_norm(const TangentTensor& x) {
  return tangent_norm(BaseContext(x.base), x);
}

TangentTensor unfold(const TangentTensor& x, int mode) {
  check_mode(x.shape, mode);
  check_coords(x.coords, x.shape, x.base.manifold.embedding_dim);
  const std::int64_t m = x.num_entries();
  const int dk = x.shape[mode];
  const std::int64_t cols = m / dk;
  TangentTensor out;
  out.base = x.base;
  out.shape = {dk, static_cast<int>(cols)};
  out.coords.resize(m, x.coords.cols());
  std::vector<int> rest = x.shape;
  rest.erase(rest.begin() + mode);
  for (std::int64_t e = 0; e < m; ++e) {
    std::vector<int> idx = unflatten_index(x.shape, e);
    int r = idx[mode];
    std::vector<int> rem = idx;
    rem.erase(rem.begin() + mode);
    std::int64_t c = flatten_index(rest, rem);
    out.coords.row(r * cols + c) = x.coords.row(e);
  }
  return out;
}

TangentTensor fold(const TangentTensor& unfolded, int mode,
                   const std::vector<int>& shape) {
  check_mode(shape, mode);
  if (unfolded.order() != 2)
    throw InvalidArgumentError("fold expects a matricised tensor");
  const std::int64_t m = shape_num_entries(shape);
  if (unfolded.num_entries() != m ||
      unfolded.shape[0] != shape[mode])
    throw ShapeMismatchError("matricisation does not match target shape");
  TangentTensor out;
  out.base = unfolded.base;
  out.shape = shape;
  out.coords.resize(m, unfolded.coords.cols());
  std::vector<int> rest = shape;
  rest.erase(rest.begin() + mode);
  const std::int64_t cols = m / shape[mode];
  for (std::int64_t e = 0; e < m; ++e) {
    std::vector<int> idx = unflatten_index(shape, e);
    int r = idx[mode];
    std::vector<int> rem = idx;
    rem.erase(rem.begin() + mode);
    std::int64_t c = flatten_index(rest, rem);
    out.coords.row(e) = unfolded.coords.row(r * cols + c);
  }
  return out;
}

TangentTensor mode_product(const TangentTensor& x, const Eigen::MatrixXd& m,
                           int mode) {
  check_mode(x.shape, mode);
  check_coords(x.coords, x.shape, x.base.manifold.embedding_dim);
  if (m.cols() != x.shape[mode])
    throw DimensionMismatchError("matrix columns do not match mode dimension");
  TangentTensor out;
  out.base = x.base;
  out.shape = x.shape;
  out.shape[mode] = static_cast<int>(m.rows());
  out.coords = Eigen::MatrixXd::Zero(shape_num_entries(out.shape),
                                     x.coords.cols());
  const std::int64_t min = x.num_entries();
  for (std::int64_t e = 0; e < min; ++e) {
    std::vector<int> idx = unflatten_index(x.shape, e);
    const int s = idx[mode];
    for (int j = 0; j < m.rows(); ++j) {
      idx[mode] = j;
      out.coords.row(flatten_index(out.shape, idx)) += m(j, s) * x.coords.row(e);
    }
  }
  return out;
}

TangentTensor multi_mode_product(const TangentTensor& x,
                                 const std::vector<Eigen::MatrixXd>& ms) {
  if (ms.empty()) return x;
  if (static_cast<int>(ms.size()) != x.order())
    throw DimensionMismatchError("need one matrix per mode");
  TangentTensor out = x;
  for (int k = 0; k < x.order(); ++k) out = mode_product(out, ms[k], k);
  return out;
}

Eigen::MatrixXd kronecker_product(const std::vector<Eigen::MatrixXd>& ms) {
  Eigen::MatrixXd kron = Eigen::MatrixXd::Ones(1, 1);
  for (const Eigen::MatrixXd& u : ms) {
    Eigen::MatrixXd next(kron.rows() * u.rows(), kron.cols() * u.cols());
    for (Eigen::Index r = 0; r < kron.rows(); ++r)
      for (Eigen::Index c = 0; c < kron.cols(); ++c)
        next.block(r * u.rows(), c * u.cols(), u.rows(), u.cols()) =
            kron(r, c) * u;
    kron = std::move(next);
  }
  return kron;
}

}  // namespace mantensor
