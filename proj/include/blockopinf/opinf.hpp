#pragma once

// Regularized least-squares operator inference: monolithic and
// block-structured assembly, grouped Tikhonov solves, the Galerkin
// projection oracle and operator-entry counts.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "blockopinf/error.hpp"
#include "blockopinf/fomsim.hpp"
#include "blockopinf/operators.hpp"
#include "blockopinf/pod.hpp"
#include "blockopinf/tensorkit.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Method { monolithic, block };

inline std::string method_name(Method m) { return m == Method::monolithic ? "monolithic" : "block"; }

inline Method method_from_name(const std::string& s) {
  if (s == "monolithic") return Method::monolithic;
  if (s == "block") return Method::block;
  throw ConfigError("unknown method '" + s + "' (expected monolithic or block)");
}

/// Three regularization weights. Block: (s_linear, f_linear, f_quadratic).
/// Monolithic: (c, A, H).
struct RegWeights {
  std::array<double, 3> gamma{0.0, 0.0, 0.0};

  static RegWeights block(double s_linear, double f_linear, double f_quadratic) {
    return RegWeights{{s_linear, f_linear, f_quadratic}};
  }
  static RegWeights monolithic(double c, double A, double H) { return RegWeights{{c, A, H}}; }

  double s_linear() const noexcept { return gamma[0]; }
  double f_linear() const noexcept { return gamma[1]; }
  double f_quadratic() const noexcept { return gamma[2]; }

  void validate() const {
    for (double g : gamma)
      if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("regularization weights must be finite and nonnegative");
  }

  friend bool operator==(const RegWeights&, const RegWeights&) = default;
  friend auto operator<=>(const RegWeights&, const RegWeights&) = default;
};

struct LeastSquaresSystem {
  MatrixXd D;  // k x p
  MatrixXd R;  // m x k
};

/// D row t = [1, q_t^T, compact(q_t)^T]; R = Qdot.
inline LeastSquaresSystem assemble_monolithic(const Eigen::Ref<const MatrixXd>& Qhat,
                                              const Eigen::Ref<const MatrixXd>& Qdot) {
  if (Qhat.cols() != Qdot.cols() || Qhat.rows() != Qdot.rows())
    throw ShapeError("assemble_monolithic: state and derivative matrices differ in shape");
  if (Qhat.rows() < 1 || Qhat.cols() < 1) throw InvalidDimensionError("assemble_monolithic: empty data");
  const Index r = Qhat.rows(), k = Qhat.cols();
  LeastSquaresSystem sys;
  sys.D.resize(k, 1 + r + compact_size(r));
  sys.D.col(0).setOnes();
  sys.D.middleCols(1, r) = Qhat.transpose();
  sys.D.rightCols(compact_size(r)) = compact_features(Qhat).transpose();
  sys.R = Qdot;
  return sys;
}

/// Column range of one block inside an assembled data matrix.
struct ColumnGroup {
  BlockId block;
  Index first;
  Index count;
};

struct BlockSystem {
  MatrixXd D;
  MatrixXd R;
  std::vector<ColumnGroup> groups;
};

namespace detail {

inline MatrixXd feature_matrix(Feature f, const Eigen::Ref<const MatrixXd>& Qs, const Eigen::Ref<const MatrixXd>& Qf) {
  switch (f) {
    case Feature::constant: return MatrixXd::Ones(1, Qs.cols());
    case Feature::q_s: return Qs;
    case Feature::q_f: return Qf;
    case Feature::kron_s: return compact_features(Qs);
    case Feature::cross: return cross_features(Qs, Qf);
    case Feature::kron_f: return compact_features(Qf);
  }
  return {};
}

}  // namespace detail

/// Data matrix of the `target` subproblem holding only LEARN blocks, in the
/// order [1, Q_s, Q_f, Q_s(x)Q_s, Q_s(x)Q_f, Q_f(x)Q_f]. KNOWN blocks are
/// moved to the right-hand side.
inline BlockSystem assemble_block(const Eigen::Ref<const MatrixXd>& Qs, const Eigen::Ref<const MatrixXd>& Qf,
                                  const Eigen::Ref<const MatrixXd>& Rtarget, const StructureMask& mask,
                                  Physics target) {
  const Index k = Qs.cols();
  if (Qf.cols() != k || Rtarget.cols() != k) throw ShapeError("assemble_block: column counts differ");
  if (Qs.rows() < 1 || Qf.rows() < 1 || k < 1) throw InvalidDimensionError("assemble_block: empty data");
  const Index rs = Qs.rows(), rf = Qf.rows();
  const Index rows = target == Physics::structural ? rs : rf;
  if (Rtarget.rows() != rows) throw ShapeError("assemble_block: right-hand side rows do not match the target physics");
  mask.validate(rs, rf);

  BlockSystem sys;
  Index p = 0;
  for (auto b : row_blocks(target)) {
    if (!mask.learns(b)) continue;
    const Index c = block_cols(b, rs, rf);
    sys.groups.push_back({b, p, c});
    p += c;
  }
  sys.D.resize(k, p);
  for (const auto& g : sys.groups) sys.D.middleCols(g.first, g.count) = detail::feature_matrix(block_feature(g.block), Qs, Qf).transpose();
  sys.R = Rtarget;
  for (auto b : row_blocks(target)) {
    const auto& spec = mask.spec(b);
    if (spec.mode != BlockMode::known) continue;
    sys.R.noalias() -= spec.value * detail::feature_matrix(block_feature(b), Qs, Qf);
  }
  return sys;
}

struct TikhonovSolution {
  MatrixXd O;  // m x p
  Index rank = 0;
  bool rank_deficient = false;
};

/// Minimizes ||D O^T - R^T||_F^2 + sum_j gamma_j ||O(:, j)||^2 via a
/// complete orthogonal decomposition of [D; diag(sqrt(gamma))].
inline TikhonovSolution solve_tikhonov(const Eigen::Ref<const MatrixXd>& D, const Eigen::Ref<const MatrixXd>& R,
                                       const Eigen::Ref<const VectorXd>& column_gamma) {
  const Index k = D.rows(), p = D.cols();
  if (p < 1) throw InvalidDimensionError("solve_tikhonov: data matrix has no columns");
  if (R.cols() != k) throw ShapeError("solve_tikhonov: right-hand side columns must match data rows");
  if (column_gamma.size() != p) throw ShapeError("solve_tikhonov: one weight per data column required");
  for (Index j = 0; j < p; ++j)
    if (!(column_gamma(j) >= 0.0) || !std::isfinite(column_gamma(j)))
      throw DomainError("solve_tikhonov: weights must be finite and nonnegative");
  if (!D.allFinite() || !R.allFinite()) throw NumericError("solve_tikhonov: non-finite data");

  MatrixXd A(k + p, p);
  A.topRows(k) = D;
  A.bottomRows(p) = column_gamma.cwiseSqrt().asDiagonal();
  MatrixXd B = MatrixXd::Zero(k + p, R.rows());
  B.topRows(k) = R.transpose();
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  TikhonovSolution sol;
  sol.O = cod.solve(B).transpose();
  sol.rank = cod.rank();
  sol.rank_deficient = sol.rank < p;
  return sol;
}

/// Convenience overload with one scalar weight for every column.
inline TikhonovSolution solve_tikhonov(const Eigen::Ref<const MatrixXd>& D, const Eigen::Ref<const MatrixXd>& R,
                                       double gamma) {
  return solve_tikhonov(D, R, VectorXd::Constant(D.cols(), gamma));
}

/// Weight group of each block in the block problem. Structural nonlinear
/// blocks share the quadratic weight.
inline double block_gamma(BlockId b, const RegWeights& w) {
  switch (b) {
    case BlockId::c_s:
    case BlockId::A_s:
    case BlockId::E_s: return w.s_linear();
    case BlockId::c_f:
    case BlockId::A_f:
    case BlockId::E_f: return w.f_linear();
    default: return w.f_quadratic();
  }
}

struct InferenceResult {
  OperatorSet ops;
  bool rank_deficient = false;
  std::vector<Index> ranks;       // one per solve
  std::vector<Index> unknowns;    // columns per solve
};

/// Two independent solves (structural and fluid). ZERO blocks are absent,
/// KNOWN blocks are copied into the result.
inline InferenceResult infer_block(const Eigen::Ref<const MatrixXd>& Qhat, const Eigen::Ref<const MatrixXd>& Qdot,
                                   Index r_s, const StructureMask& mask, const RegWeights& w) {
  w.validate();
  if (Qhat.rows() != Qdot.rows() || Qhat.cols() != Qdot.cols())
    throw ShapeError("infer_block: state and derivative matrices differ in shape");
  if (r_s < 1 || r_s >= Qhat.rows()) throw InvalidDimensionError("infer_block: r_s must lie in [1, r)");
  const Index r_f = Qhat.rows() - r_s;
  InferenceResult res{OperatorSet::make_block(r_s, r_f), false, {}, {}};
  const auto Qs = Qhat.topRows(r_s);
  const auto Qf = Qhat.bottomRows(r_f);
  for (Physics p : {Physics::structural, Physics::fluid}) {
    const auto R = p == Physics::structural ? Qdot.topRows(r_s) : Qdot.bottomRows(r_f);
    auto sys = assemble_block(Qs, Qf, R, mask, p);
    if (sys.D.cols() > 0) {
      VectorXd gam(sys.D.cols());
      for (const auto& g : sys.groups) gam.segment(g.first, g.count).setConstant(block_gamma(g.block, w));
      auto sol = solve_tikhonov(sys.D, sys.R, gam);
      res.rank_deficient = res.rank_deficient || sol.rank_deficient;
      res.ranks.push_back(sol.rank);
      res.unknowns.push_back(sys.D.cols());
      for (const auto& g : sys.groups) res.ops.set_block(g.block, sol.O.middleCols(g.first, g.count));
    }
    for (auto b : row_blocks(p))
      if (mask.mode(b) == BlockMode::known) res.ops.set_block(b, mask.spec(b).value);
  }
  return res;
}

/// Single solve with weights (gamma_c, gamma_A, gamma_H).
inline InferenceResult infer_monolithic(const Eigen::Ref<const MatrixXd>& Qhat, const Eigen::Ref<const MatrixXd>& Qdot,
                                        Index r_s, const RegWeights& w) {
  w.validate();
  const Index r = Qhat.rows();
  if (r_s < 1 || r_s >= r) throw InvalidDimensionError("infer_monolithic: r_s must lie in [1, r)");
  auto sys = assemble_monolithic(Qhat, Qdot);
  VectorXd gam(sys.D.cols());
  gam(0) = w.gamma[0];
  gam.segment(1, r).setConstant(w.gamma[1]);
  gam.tail(compact_size(r)).setConstant(w.gamma[2]);
  auto sol = solve_tikhonov(sys.D, sys.R, gam);
  InferenceResult res{OperatorSet::make_monolithic(r_s, r - r_s, sol.O.col(0), sol.O.middleCols(1, r),
                                                   sol.O.rightCols(compact_size(r))),
                      sol.rank_deficient,
                      {sol.rank},
                      {sys.D.cols()}};
  return res;
}

inline InferenceResult infer(Method method, const Eigen::Ref<const MatrixXd>& Qhat,
                             const Eigen::Ref<const MatrixXd>& Qdot, Index r_s, const StructureMask& mask,
                             const RegWeights& w) {
  return method == Method::monolithic ? infer_monolithic(Qhat, Qdot, r_s, w) : infer_block(Qhat, Qdot, r_s, mask, w);
}

/// Sub-block of a monolithic operator set that corresponds to `b` under the
/// partition (r_s, r_f).
inline MatrixXd extract_block(const OperatorSet& mono, BlockId b) {
  const OperatorSet& m = mono;
  if (m.kind() != OperatorKind::monolithic) throw DomainError("extract_block: monolithic operator set required");
  const Index rs = m.r_s(), rf = m.r_f(), r = rs + rf;
  const bool srow = block_row(b) == Physics::structural;
  const Index r0 = srow ? 0 : rs, nr = srow ? rs : rf;
  switch (block_feature(b)) {
    case Feature::constant: return m.c().segment(r0, nr);
    case Feature::q_s: return m.A().block(r0, 0, nr, rs);
    case Feature::q_f: return m.A().block(r0, rs, nr, rf);
    case Feature::kron_s: {
      MatrixXd out(nr, compact_size(rs));
      for (Index i = 0; i < rs; ++i)
        for (Index j = i; j < rs; ++j) out.col(compact_index(i, j, rs)) = m.H().block(r0, compact_index(i, j, r), nr, 1);
      return out;
    }
    case Feature::cross: {
      MatrixXd out(nr, rs * rf);
      for (Index i = 0; i < rs; ++i)
        for (Index j = 0; j < rf; ++j) out.col(i * rf + j) = m.H().block(r0, compact_index(i, rs + j, r), nr, 1);
      return out;
    }
    case Feature::kron_f: {
      MatrixXd out(nr, compact_size(rf));
      for (Index i = 0; i < rf; ++i)
        for (Index j = i; j < rf; ++j)
          out.col(compact_index(i, j, rf)) = m.H().block(r0, compact_index(rs + i, rs + j, r), nr, 1);
      return out;
    }
  }
  return {};
}

/// Magnitude of monolithic entries sitting where `mask` prescribes zero.
struct Leakage {
  double frobenius = 0.0;
  double max_abs = 0.0;
  Index entries = 0;
};

inline Leakage structural_zero_leakage(const OperatorSet& mono, const StructureMask& mask) {
  Leakage l;
  double sq = 0.0;
  for (auto b : kAllBlocks) {
    if (mask.mode(b) != BlockMode::zero) continue;
    const MatrixXd blk = extract_block(mono, b);
    sq += blk.squaredNorm();
    l.max_abs = std::max(l.max_abs, blk.size() ? blk.cwiseAbs().maxCoeff() : 0.0);
    l.entries += blk.size();
  }
  l.frobenius = std::sqrt(sq);
  return l;
}

namespace detail {

// Row-wise projection of a compact quadratic operator:
// out(k, :) = compact(Va^T T_k Va) with T_k the symmetric form of row k.
inline MatrixXd project_compact_quadratic(const MatrixXd& H, const MatrixXd& Va) {
  const Index n = Va.rows(), r = Va.cols();
  MatrixXd out(H.rows(), compact_size(r));
  MatrixXd T(n, n), M(r, r);
  for (Index k = 0; k < H.rows(); ++k) {
    for (Index i = 0; i < n; ++i) {
      T(i, i) = H(k, compact_index(i, i, n));
      for (Index j = i + 1; j < n; ++j) T(i, j) = T(j, i) = 0.5 * H(k, compact_index(i, j, n));
    }
    M.noalias() = Va.transpose() * T * Va;
    for (Index a = 0; a < r; ++a) {
      out(k, compact_index(a, a, r)) = M(a, a);
      for (Index b = a + 1; b < r; ++b) out(k, compact_index(a, b, r)) = M(a, b) + M(b, a);
    }
  }
  return out;
}

// out(k, a r_f + b) = (V_s^T B_k V_f)(a, b) with B_k(i, j) = L(k, i n_f + j).
inline MatrixXd project_cross(const MatrixXd& L, const MatrixXd& Vs, const MatrixXd& Vf) {
  const Index ns = Vs.rows(), nf = Vf.rows(), rs = Vs.cols(), rf = Vf.cols();
  MatrixXd out(L.rows(), rs * rf);
  MatrixXd B(ns, nf), M(rs, rf);
  for (Index k = 0; k < L.rows(); ++k) {
    for (Index i = 0; i < ns; ++i)
      for (Index j = 0; j < nf; ++j) B(i, j) = L(k, i * nf + j);
    M.noalias() = Vs.transpose() * B * Vf;
    for (Index a = 0; a < rs; ++a)
      for (Index b = 0; b < rf; ++b) out(k, a * rf + b) = M(a, b);
  }
  return out;
}

}  // namespace detail

/// Galerkin projection of every FOM block onto the coupled basis.
inline OperatorSet intrusive_project(const OperatorSet& full, const CoupledBasis& basis) {
  if (full.kind() != OperatorKind::block) throw DomainError("intrusive_project: block operators required");
  if (full.r_s() != basis.n_s() || full.r_f() != basis.n_f())
    throw ShapeError("intrusive_project: basis does not match the operator dimensions");
  const MatrixXd& Vs = basis.structural.vectors;
  const MatrixXd& Vf = basis.fluid.vectors;
  auto out = OperatorSet::make_block(basis.r_s(), basis.r_f());
  for (auto b : kAllBlocks) {
    if (!full.has(b)) continue;
    const MatrixXd& M = full.block(b);
    const MatrixXd& Vrow = block_row(b) == Physics::structural ? Vs : Vf;
    MatrixXd right;
    switch (block_feature(b)) {
      case Feature::constant: right = M; break;
      case Feature::q_s: right = M * Vs; break;
      case Feature::q_f: right = M * Vf; break;
      case Feature::kron_s: right = detail::project_compact_quadratic(M, Vs); break;
      case Feature::kron_f: right = detail::project_compact_quadratic(M, Vf); break;
      case Feature::cross: right = detail::project_cross(M, Vs, Vf); break;
    }
    out.set_block(b, Vrow.transpose() * right);
  }
  return out;
}

inline OperatorSet intrusive_project(const CoupledFom& fom, const CoupledBasis& basis) {
  return intrusive_project(fom.operators(), basis);
}

/// Learned operator entries.
inline Index count_parameters(Method method, Index r_s, Index r_f,
                              const StructureMask& mask = StructureMask::agard_like()) {
  if (r_s < 1 || r_f < 1) throw InvalidDimensionError("count_parameters: r_s and r_f must be positive");
  if (method == Method::monolithic) {
    const Index r = r_s + r_f;
    return r + r * r + r * compact_size(r);
  }
  Index n = 0;
  for (auto b : kAllBlocks)
    if (mask.learns(b)) n += block_rows(b, r_s, r_f) * block_cols(b, r_s, r_f);
  return n;
}

/// Relative Frobenius distance ||a - b|| / ||b||; absolute when ||b|| == 0.
inline double relative_frobenius(const Eigen::Ref<const MatrixXd>& a, const Eigen::Ref<const MatrixXd>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("relative_frobenius: shape mismatch");
  const double nb = b.norm();
  const double d = (a - b).norm();
  return nb > 0.0 ? d / nb : d;
}

}  // namespace bopinf
