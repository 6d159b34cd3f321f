#include "mantensor/tucker.hpp"

#include <cmath>

namespace mantensor {

namespace {
using Eigen::MatrixXd;
using Eigen::VectorXd;
}  // namespace

std::vector<int> TuckerFactors::kept_ranks() const { return core.shape; }

Eigen::MatrixXd gram_matrix(const BaseContext& base,
                            const TangentTensor& unfolded) {
  if (unfolded.order() != 2)
    throw InvalidArgumentError("gram_matrix expects a matricised tensor");
  if (!(unfolded.base.manifold == base.manifold()))
    throw DimensionMismatchError("tangent manifold does not match base point");
  const int rows = unfolded.shape[0];
  const int cols = unfolded.shape[1];
  MatrixXd w = base.metric_rows(unfolded.coords);
  MatrixXd g = MatrixXd::Zero(rows, rows);
  for (int a = 0; a < rows; ++a)
    for (int b = a; b < rows; ++b) {
      double s = 0.0;
      for (int c = 0; c < cols; ++c)
        s += w.row(a * cols + c).dot(w.row(b * cols + c));
      g(a, b) = s;
      g(b, a) = s;
    }
  return g;
}

ModeSvd tangent_svd(const BaseContext& base, const TangentTensor& logs,
                    int mode) {
  MatrixXd g = gram_matrix(base, unfold(logs, mode));
  VectorXd evals;
  MatrixXd evecs;
  eigh_descending(g, evals, evecs);
  double top = evals.size() > 0 ? std::max(0.0, evals[0]) : 0.0;
  int rank = 0;
  while (rank < evals.size() && evals[rank] > kRankTol * top && evals[rank] > 0.0)
    ++rank;
  ModeSvd out;
  out.rank = rank;
  const int kept = rank < 1 ? 1 : rank;
  out.u = evecs.leftCols(kept);
  out.sigma = VectorXd::Zero(kept);
  for (int i = 0; i < rank; ++i) out.sigma[i] = std::sqrt(evals[i]);
  return out;
}

ModeSvd tangent_svd(const ManifoldPoint& p, const MvTensor& t, int mode) {
  BaseContext base(p);
  return tangent_svd(base, log_tensor(base, t), mode);
}

TuckerFactors thosvd(const BaseContext& base, const TangentTensor& logs) {
  const int order = logs.order();
  TuckerFactors f;
  f.factors.reserve(order);
  f.singular_values.reserve(order);
  f.detected_ranks.reserve(order);
  std::vector<MatrixXd> transposed;
  transposed.reserve(order);
  for (int k = 0; k < order; ++k) {
    ModeSvd m = tangent_svd(base, logs, k);
    transposed.push_back(m.u.transpose());
    f.factors.push_back(std::move(m.u));
    f.singular_values.push_back(std::move(m.sigma));
    f.detected_ranks.push_back(m.rank);
  }
  f.core = multi_mode_product(logs, transposed);
  return f;
}

TuckerFactors thosvd(const ManifoldPoint& p, const MvTensor& t) {
  BaseContext base(p);
  return thosvd(base, log_tensor(base, t));
}

TuckerFactors truncate(const TuckerFactors& f, const std::vector<int>& ranks,
                       bool* clamped) {
  const int order = f.core.order();
  if (static_cast<int>(ranks.size()) != order)
    throw DimensionMismatchError("rank tuple order does not match tensor");
  if (clamped) *clamped = false;
  std::vector<int> kept(order);
  for (int k = 0; k < order; ++k) {
    if (ranks[k] < 1)
      throw InvalidArgumentError("requested rank must be >= 1");
    kept[k] = ranks[k];
    if (kept[k] > f.detected_ranks[k]) {
      // an all-zero mode detects rank 0; keep one (zero) column so the
      // truncated core stays a valid tensor
      kept[k] = f.detected_ranks[k] < 1 ? 1 : f.detected_ranks[k];
      if (clamped) *clamped = true;
    }
  }
  TuckerFactors out;
  out.detected_ranks = f.detected_ranks;
  for (int k = 0; k < order; ++k) {
    out.factors.push_back(f.factors[k].leftCols(kept[k]));
    out.singular_values.push_back(f.singular_values[k].head(kept[k]));
  }
  out.core.base = f.core.base;
  out.core.shape = kept;
  out.core.coords.resize(shape_num_entries(kept), f.core.coords.cols());
  for (std::int64_t e = 0; e < out.core.num_entries(); ++e) {
    std::vector<int> idx = unflatten_index(kept, e);
    out.core.coords.row(e) = f.core.coords.row(flatten_index(f.core.shape, idx));
  }
  return out;
}

TangentTensor reconstruct(const TuckerFactors& f) {
  return multi_mode_product(f.core, f.factors);
}

}  // namespace mantensor
