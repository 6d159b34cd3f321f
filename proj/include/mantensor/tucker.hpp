#pragma once

#include <vector>

#include "mantensor/tensor.hpp"

namespace mantensor {

// Relative cutoff on squared singular values for rank detection.
inline constexpr double kRankTol = 1e-12;

// A numerically zero mode reports rank 0 but still carries one basis column
// with a zero singular value, so cores built from it keep valid shapes.
struct ModeSvd {
  Eigen::MatrixXd u;       // d_k x max(rank, 1), orthonormal columns
  Eigen::VectorXd sigma;   // matching singular values, descending
  int rank = 0;            // detected mode rank
};

struct TuckerFactors {
  TangentTensor core;  // shape = kept ranks, based at the decomposition point
  std::vector<Eigen::MatrixXd> factors;
  std::vector<Eigen::VectorXd> singular_values;
  std::vector<int> detected_ranks;

  std::vector<int> kept_ranks() const;
};

// Gram matrix of the slices of a matricised tangent tensor in the product
// metric. G(a, b) sums the entrywise inner products of slices a and b; the
// slice coordinate matrix is never formed.
Eigen::MatrixXd gram_matrix(const BaseContext& base,
                            const TangentTensor& unfolded);

// Mode factor from the spectral decomposition of the Gram matrix.
// Eigenvalues below kRankTol * (largest) are treated as rank deficiency.
// Deterministic: descending order, ties by coordinate order, canonical signs.
ModeSvd tangent_svd(const BaseContext& base, const TangentTensor& logs,
                    int mode);
ModeSvd tangent_svd(const ManifoldPoint& p, const MvTensor& t, int mode);

// Full (untruncated) decomposition of the entrywise logs at p.
TuckerFactors thosvd(const BaseContext& base, const TangentTensor& logs);
TuckerFactors thosvd(const ManifoldPoint& p, const MvTensor& t);

// Keeps the leading ranks[k] columns per mode. Requested ranks above the
// detected rank clamp to it, but never below one column (sets *clamped);
// zero or negative ranks are rejected.
TuckerFactors truncate(const TuckerFactors& f, const std::vector<int>& ranks,
                       bool* clamped = nullptr);

TangentTensor reconstruct(const TuckerFactors& f);

}  // namespace mantensor
