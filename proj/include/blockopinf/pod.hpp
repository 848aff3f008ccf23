#pragma once

// Proper orthogonal decomposition: thin SVD, cumulative energy, rank
// selection, projection and the block-diagonal coupled basis.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "blockopinf/binary_io.hpp"
#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Orthonormal basis vectors plus the full singular spectrum they came from.
struct ReducedBasis {
  MatrixXd vectors;         // n x r
  VectorXd singular_values; // min(n, k), nonincreasing

  Index dim() const noexcept { return vectors.rows(); }
  Index rank() const noexcept { return vectors.cols(); }

  MatrixXd project(const Eigen::Ref<const MatrixXd>& full) const {
    if (full.rows() != dim()) throw ShapeError("ReducedBasis::project: row count does not match basis dimension");
    return vectors.transpose() * full;
  }
  MatrixXd reconstruct(const Eigen::Ref<const MatrixXd>& reduced) const {
    if (reduced.rows() != rank()) throw ShapeError("ReducedBasis::reconstruct: row count does not match rank");
    return vectors * reduced;
  }

  /// Leading `r` vectors; the spectrum is kept whole.
  ReducedBasis truncated(Index r) const {
    if (r < 1 || r > rank()) throw DomainError("ReducedBasis::truncated: rank " + std::to_string(r) + " out of range");
    return ReducedBasis{vectors.leftCols(r), singular_values};
  }

  static ReducedBasis identity(Index n) { return ReducedBasis{MatrixXd::Identity(n, n), VectorXd::Ones(n)}; }
};

namespace detail {

// Largest-magnitude entry made positive; first index wins ties.
inline void fix_signs(MatrixXd& U) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index best = 0;
    double mag = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      if (std::abs(U(i, j)) > mag) {
        mag = std::abs(U(i, j));
        best = i;
      }
    }
    if (U(best, j) < 0.0) U.col(j) *= -1.0;
  }
}

}  // namespace detail

/// Thin SVD of the snapshot matrix; all min(n, k) left singular vectors kept.
inline ReducedBasis compute_pod(const Eigen::Ref<const MatrixXd>& Q) {
  if (Q.rows() < 1 || Q.cols() < 1) throw InvalidDimensionError("compute_pod: empty snapshot matrix");
  if (!Q.allFinite()) throw NumericError("compute_pod: non-finite snapshot entries");
  Eigen::BDCSVD<MatrixXd> svd(Q, Eigen::ComputeThinU);
  MatrixXd U = svd.matrixU();
  detail::fix_signs(U);
  return ReducedBasis{std::move(U), svd.singularValues()};
}

/// Method of snapshots: eigen-decomposition of the k x k Gram matrix.
/// Cheaper when n >> k; loses relative accuracy for singular values near
/// sqrt(eps) * sigma_max. Returns only the numerically nonzero directions.
inline ReducedBasis compute_pod_gram(const Eigen::Ref<const MatrixXd>& Q) {
  if (Q.rows() < 1 || Q.cols() < 1) throw InvalidDimensionError("compute_pod_gram: empty snapshot matrix");
  if (!Q.allFinite()) throw NumericError("compute_pod_gram: non-finite snapshot entries");
  const MatrixXd gram = Q.transpose() * Q;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const Index k = gram.rows();
  const Index m = std::min(Q.rows(), Q.cols());
  VectorXd sigma(m);
  for (Index i = 0; i < m; ++i) sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(k - 1 - i)));
  const double tol = sigma(0) * 1e-12 * static_cast<double>(k);
  Index keep = 0;
  while (keep < m && sigma(keep) > tol) ++keep;
  MatrixXd U(Q.rows(), keep);
  for (Index i = 0; i < keep; ++i) U.col(i) = Q * eig.eigenvectors().col(k - 1 - i) / sigma(i);
  detail::fix_signs(U);
  return ReducedBasis{std::move(U), std::move(sigma)};
}

/// Entry j is the fraction of squared singular-value mass in the first j + 1 values.
inline VectorXd cumulative_energy(const Eigen::Ref<const VectorXd>& sigma) {
  if (sigma.size() < 1) throw InvalidDimensionError("cumulative_energy: empty spectrum");
  for (Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) >= 0.0)) throw DomainError("cumulative_energy: negative singular value");
    if (i > 0 && sigma(i) > sigma(i - 1)) throw DomainError("cumulative_energy: singular values must be nonincreasing");
  }
  const double total = sigma.squaredNorm();
  if (!(total > 0.0)) throw DegenerateError("cumulative_energy: all singular values are zero");
  VectorXd e(sigma.size());
  double acc = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    acc += sigma(i) * sigma(i);
    e(i) = acc / total;
  }
  e(e.size() - 1) = 1.0;
  return e;
}

/// Smallest r whose cumulative energy reaches `threshold`.
inline Index select_rank(const Eigen::Ref<const VectorXd>& sigma, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("select_rank: threshold must lie in (0, 1]");
  const VectorXd e = cumulative_energy(sigma);
  for (Index i = 0; i < e.size(); ++i)
    if (e(i) >= threshold) return i + 1;
  return e.size();
}

/// Frobenius norm of the discarded tail sqrt(sum_{i >= r} sigma_i^2).
inline double truncation_error(const Eigen::Ref<const VectorXd>& sigma, Index r) {
  if (r >= sigma.size()) return 0.0;
  return sigma.tail(sigma.size() - r).norm();
}

inline csv::Table spectrum_csv(const Eigen::Ref<const VectorXd>& sigma) {
  const VectorXd e = cumulative_energy(sigma);
  csv::Table t({"index", "sigma", "energy"});
  for (Index i = 0; i < sigma.size(); ++i) t.add_row({std::to_string(i + 1), csv::fmt(sigma(i)), csv::fmt(e(i))});
  return t;
}

/// Block-diagonal basis diag(V_s, V_f) over the stacked state [q_s; q_f].
struct CoupledBasis {
  ReducedBasis structural;
  ReducedBasis fluid;

  Index n_s() const noexcept { return structural.dim(); }
  Index n_f() const noexcept { return fluid.dim(); }
  Index r_s() const noexcept { return structural.rank(); }
  Index r_f() const noexcept { return fluid.rank(); }

  MatrixXd project(const Eigen::Ref<const MatrixXd>& full) const {
    if (full.rows() != n_s() + n_f()) throw ShapeError("CoupledBasis::project: row count mismatch");
    MatrixXd out(r_s() + r_f(), full.cols());
    out.topRows(r_s()) = structural.vectors.transpose() * full.topRows(n_s());
    out.bottomRows(r_f()) = fluid.vectors.transpose() * full.bottomRows(n_f());
    return out;
  }

  MatrixXd reconstruct(const Eigen::Ref<const MatrixXd>& reduced) const {
    if (reduced.rows() != r_s() + r_f()) throw ShapeError("CoupledBasis::reconstruct: row count mismatch");
    MatrixXd out(n_s() + n_f(), reduced.cols());
    out.topRows(n_s()) = structural.vectors * reduced.topRows(r_s());
    out.bottomRows(n_f()) = fluid.vectors * reduced.bottomRows(r_f());
    return out;
  }

  /// The explicit (n_s + n_f) x (r_s + r_f) block-diagonal matrix.
  MatrixXd matrix() const {
    MatrixXd V = MatrixXd::Zero(n_s() + n_f(), r_s() + r_f());
    V.topLeftCorner(n_s(), r_s()) = structural.vectors;
    V.bottomRightCorner(n_f(), r_f()) = fluid.vectors;
    return V;
  }
};

inline constexpr std::uint32_t kBasisFormatVersion = 1;

/// "OPIB" | u32 version | u32 section count | { u32 name_len | name | u64 rows | u64 cols | f64 data }
/// with sections V_s, sigma_s, V_f, sigma_f.
inline io::Writer encode_basis(const CoupledBasis& b) {
  io::Writer w;
  w.bytes("OPIB", 4);
  w.u32(kBasisFormatVersion);
  w.u32(4);
  auto section = [&w](const char* name, const Eigen::Ref<const MatrixXd>& m) {
    w.str(name);
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    w.matrix_data(m);
  };
  section("V_s", b.structural.vectors);
  section("sigma_s", b.structural.singular_values);
  section("V_f", b.fluid.vectors);
  section("sigma_f", b.fluid.singular_values);
  return w;
}

inline void write_basis(const CoupledBasis& b, const std::string& path) { encode_basis(b).save(path); }

inline CoupledBasis decode_basis(io::Reader& r) {
  r.expect_magic("OPIB");
  const auto at = r.offset();
  if (const auto v = r.u32(); v != kBasisFormatVersion)
    throw FormatError("unsupported basis format version " + std::to_string(v), at);
  const auto count_at = r.offset();
  if (r.u32() != 4) throw FormatError("basis file must hold exactly four sections", count_at);
  static constexpr const char* names[4] = {"V_s", "sigma_s", "V_f", "sigma_f"};
  MatrixXd parts[4];
  for (int i = 0; i < 4; ++i) {
    const auto name_at = r.offset();
    if (r.str() != names[i]) throw FormatError(std::string("expected section ") + names[i], name_at);
    const auto rows = r.u64();
    const auto cols = r.u64();
    parts[i] = r.matrix_data(rows, cols);
  }
  const auto end = r.offset();
  r.expect_end();
  if (parts[1].cols() != 1 || parts[3].cols() != 1) throw FormatError("singular values must be stored as columns", end);
  return CoupledBasis{ReducedBasis{parts[0], parts[1].col(0)}, ReducedBasis{parts[2], parts[3].col(0)}};
}

inline CoupledBasis read_basis(const std::string& path) {
  auto r = io::Reader::from_file(path);
  return decode_basis(r);
}

}  // namespace bopinf
