#pragma once

#include <cstdint>
#include <vector>

#include "mantensor/geometry.hpp"

namespace mantensor {

// Entries are stored row-major over the shape, one embedded coordinate
// vector per row.
struct MvTensor {
  ManifoldDescriptor manifold;
  std::vector<int> shape;
  Eigen::MatrixXd coords;  // num_entries x embedding_dim

  int order() const { return static_cast<int>(shape.size()); }
  std::int64_t num_entries() const;
  ManifoldPoint point(std::int64_t flat) const;
  void set_point(std::int64_t flat, const ManifoldPoint& p);
};

// Tangent configuration at a shared base point, same entry layout.
struct TangentTensor {
  ManifoldPoint base;
  std::vector<int> shape;
  Eigen::MatrixXd coords;  // num_entries x embedding_dim

  int order() const { return static_cast<int>(shape.size()); }
  std::int64_t num_entries() const;
};

std::int64_t shape_num_entries(const std::vector<int>& shape);
std::int64_t flatten_index(const std::vector<int>& shape,
                           const std::vector<int>& idx);
std::vector<int> unflatten_index(const std::vector<int>& shape,
                                 std::int64_t flat);

MvTensor make_mv_tensor(const ManifoldDescriptor& m,
                        const std::vector<int>& shape);

// Entrywise log/exp against a shared base point.
TangentTensor log_tensor(const BaseContext& base, const MvTensor& t);
MvTensor exp_tensor(const BaseContext& base, const TangentTensor& x);
TangentTensor log_tensor(const ManifoldPoint& p, const MvTensor& t);
MvTensor exp_tensor(const ManifoldPoint& p, const TangentTensor& x);

// Product-metric distance sqrt(sum of squared entry distances); the
// reduction order is the flat entry order, so results are reproducible.
double tensor_distance(const MvTensor& a, const MvTensor& b);

// Product-metric norm of a tangent configuration at its base.
double tangent_norm(const TangentTensor& x);
double tangent_norm(const BaseContext& base, const TangentTensor& x);

// Mode-k matricisation (modes are 0-based): rows follow index k, columns
// run over the remaining indices row-major with index k removed.
TangentTensor unfold(const TangentTensor& x, int mode);
TangentTensor fold(const TangentTensor& unfolded, int mode,
                   const std::vector<int>& shape);

// (x ×_k m) contracting index k of x with the columns of m.
TangentTensor mode_product(const TangentTensor& x, const Eigen::MatrixXd& m,
                           int mode);

// Applies ms[k] along mode k for k = 0..n-1 in sequence. An empty list is
// the identity.
TangentTensor multi_mode_product(const TangentTensor& x,
                                 const std::vector<Eigen::MatrixXd>& ms);

// Kronecker product of the matrices, first factor slowest, so row/column
// indices follow the row-major flattening of the per-mode indices.
Eigen::MatrixXd kronecker_product(const std::vector<Eigen::MatrixXd>& ms);

}  // namespace mantensor
