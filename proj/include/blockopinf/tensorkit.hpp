#pragma once

// Quadratic feature maps: the compact self-Kronecker product (unique entries of
// v (x) v) and the plain cross-Kronecker product a (x) b.
//
// Compact ordering is lexicographic over pairs (i, j) with i <= j:
//   (0,0), (0,1), ..., (0,d-1), (1,1), (1,2), ..., (d-1,d-1)
// Off-diagonal entries carry the raw product v_i v_j (no factor of two).

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "blockopinf/error.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr Index compact_size(Index d) noexcept { return d * (d + 1) / 2; }

/// Position of pair (i, j), i <= j, in the compact ordering.
constexpr Index compact_index(Index i, Index j, Index d) noexcept {
  return i * d - i * (i - 1) / 2 + (j - i);
}

/// Explicit table of compact index pairs for dimension `dim`.
class QuadIndexMap {
 public:
  explicit QuadIndexMap(Index dim) : dim_(dim) {
    if (dim < 1) throw InvalidDimensionError("QuadIndexMap: dimension must be positive");
    pairs_.reserve(static_cast<std::size_t>(compact_size(dim)));
    for (Index i = 0; i < dim; ++i)
      for (Index j = i; j < dim; ++j) pairs_.emplace_back(i, j);
  }

  Index dim() const noexcept { return dim_; }
  Index size() const noexcept { return static_cast<Index>(pairs_.size()); }
  const std::vector<std::pair<Index, Index>>& pairs() const noexcept { return pairs_; }
  std::pair<Index, Index> operator[](Index k) const { return pairs_[static_cast<std::size_t>(k)]; }
  Index index_of(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    return compact_index(i, j, dim_);
  }

 private:
  Index dim_;
  std::vector<std::pair<Index, Index>> pairs_;
};

/// Writes the compact self-Kronecker product of `v` into `out` (resized if needed).
/// Allocation-free when `out` already has the right size.
template <typename VecIn, typename VecOut>
void compact_self_kron_into(const Eigen::MatrixBase<VecIn>& v, Eigen::MatrixBase<VecOut>& out) {
  const Index d = v.size();
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    const double vi = v(i);
    for (Index j = i; j < d; ++j) out(k++) = vi * v(j);
  }
}

inline VectorXd compact_self_kron(const Eigen::Ref<const VectorXd>& v) {
  if (v.size() < 1) throw InvalidDimensionError("compact_self_kron: empty vector");
  VectorXd out(compact_size(v.size()));
  compact_self_kron_into(v, out);
  return out;
}

/// out[i * d_b + j] = a[i] * b[j]
template <typename VecA, typename VecB, typename VecOut>
void cross_kron_into(const Eigen::MatrixBase<VecA>& a, const Eigen::MatrixBase<VecB>& b,
                     Eigen::MatrixBase<VecOut>& out) {
  const Index nb = b.size();
  for (Index i = 0; i < a.size(); ++i) out.segment(i * nb, nb) = a(i) * b;
}

inline VectorXd cross_kron(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() < 1 || b.size() < 1) throw InvalidDimensionError("cross_kron: empty input");
  VectorXd out(a.size() * b.size());
  cross_kron_into(a, b, out);
  return out;
}

/// Full d^2 Kronecker product v (x) v.
inline VectorXd full_self_kron(const Eigen::Ref<const VectorXd>& v) { return cross_kron(v, v); }

/// Rebuilds the full Kronecker product from its compact form by symmetry.
inline VectorXd full_from_compact(const Eigen::Ref<const VectorXd>& compact, Index d) {
  if (compact.size() != compact_size(d)) throw ShapeError("full_from_compact: length mismatch");
  VectorXd full(d * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) full(i * d + j) = compact(i <= j ? compact_index(i, j, d) : compact_index(j, i, d));
  return full;
}

/// Picks the (i <= j) entries out of a full Kronecker product.
inline VectorXd compact_from_full(const Eigen::Ref<const VectorXd>& full, Index d) {
  if (full.size() != d * d) throw ShapeError("compact_from_full: length mismatch");
  VectorXd compact(compact_size(d));
  Index k = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = i; j < d; ++j) compact(k++) = full(i * d + j);
  return compact;
}

/// Column t of the result is compact_self_kron(Q.col(t)).
inline MatrixXd compact_features(const Eigen::Ref<const MatrixXd>& Q) {
  if (Q.rows() < 1) throw InvalidDimensionError("compact_features: zero-row matrix");
  MatrixXd out(compact_size(Q.rows()), Q.cols());
  for (Index t = 0; t < Q.cols(); ++t) {
    auto col = out.col(t);
    compact_self_kron_into(Q.col(t), col);
  }
  return out;
}

/// Column t of the result is cross_kron(Qa.col(t), Qb.col(t)).
inline MatrixXd cross_features(const Eigen::Ref<const MatrixXd>& Qa, const Eigen::Ref<const MatrixXd>& Qb) {
  if (Qa.cols() != Qb.cols()) throw ShapeError("cross_features: column counts differ");
  if (Qa.rows() < 1 || Qb.rows() < 1) throw InvalidDimensionError("cross_features: zero-row matrix");
  MatrixXd out(Qa.rows() * Qb.rows(), Qa.cols());
  for (Index t = 0; t < Qa.cols(); ++t) {
    auto col = out.col(t);
    cross_kron_into(Qa.col(t), Qb.col(t), col);
  }
  return out;
}

}  // namespace bopinf
