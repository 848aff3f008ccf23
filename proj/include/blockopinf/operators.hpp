#pragma once

// Block-structured and monolithic polynomial operator sets, structure masks,
// right-hand-side evaluation and the operator file format.
//
// Block form over q = [q_s; q_f]:
//   q_s' = c_s + A_s q_s + E_s q_f + H_s (q_s (x) q_s) + L_s (q_s (x) q_f) + G_s (q_f (x) q_f)
//   q_f' = c_f + E_f q_s + A_f q_f + G_f (q_s (x) q_s) + L_f (q_s (x) q_f) + H_f (q_f (x) q_f)
// Self products are compact; the cross product q_s (x) q_f is full.
//
// Operator file layout (little-endian):
//   "OPIO" | u32 version=1 | u32 kind (0 monolithic, 1 block) | u64 r_s | u64 r_f
//   | u32 section_count | { u32 name_len | name | u64 rows | u64 cols | f64 data (column-major) }

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockopinf/binary_io.hpp"
#include "blockopinf/error.hpp"
#include "blockopinf/tensorkit.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BlockId : int { c_s, c_f, A_s, A_f, E_s, E_f, H_s, H_f, L_s, L_f, G_s, G_f };
inline constexpr int kBlockCount = 12;

inline constexpr std::array<BlockId, kBlockCount> kAllBlocks{BlockId::c_s, BlockId::c_f, BlockId::A_s, BlockId::A_f,
                                                            BlockId::E_s, BlockId::E_f, BlockId::H_s, BlockId::H_f,
                                                            BlockId::L_s, BlockId::L_f, BlockId::G_s, BlockId::G_f};

/// Which physics row of the block system a block belongs to.
enum class Physics { structural, fluid };

/// The data feature a block multiplies.
enum class Feature { constant, q_s, q_f, kron_s, cross, kron_f };

inline constexpr std::array<std::string_view, kBlockCount> kBlockNames{"c_s", "c_f", "A_s", "A_f", "E_s", "E_f",
                                                                      "H_s", "H_f", "L_s", "L_f", "G_s", "G_f"};

constexpr std::string_view block_name(BlockId b) noexcept { return kBlockNames[static_cast<std::size_t>(b)]; }

inline BlockId block_from_name(std::string_view name) {
  for (auto b : kAllBlocks)
    if (block_name(b) == name) return b;
  throw DomainError("unknown operator block '" + std::string(name) + "'");
}

constexpr Physics block_row(BlockId b) noexcept {
  return static_cast<int>(b) % 2 == 0 ? Physics::structural : Physics::fluid;
}

constexpr Feature block_feature(BlockId b) noexcept {
  switch (b) {
    case BlockId::c_s:
    case BlockId::c_f: return Feature::constant;
    case BlockId::A_s: return Feature::q_s;
    case BlockId::E_f: return Feature::q_s;
    case BlockId::A_f: return Feature::q_f;
    case BlockId::E_s: return Feature::q_f;
    case BlockId::H_s: return Feature::kron_s;
    case BlockId::G_f: return Feature::kron_s;
    case BlockId::L_s:
    case BlockId::L_f: return Feature::cross;
    case BlockId::H_f: return Feature::kron_f;
    case BlockId::G_s: return Feature::kron_f;
  }
  return Feature::constant;
}

constexpr Index feature_size(Feature f, Index r_s, Index r_f) noexcept {
  switch (f) {
    case Feature::constant: return 1;
    case Feature::q_s: return r_s;
    case Feature::q_f: return r_f;
    case Feature::kron_s: return compact_size(r_s);
    case Feature::cross: return r_s * r_f;
    case Feature::kron_f: return compact_size(r_f);
  }
  return 0;
}

constexpr Index block_rows(BlockId b, Index r_s, Index r_f) noexcept {
  return block_row(b) == Physics::structural ? r_s : r_f;
}
constexpr Index block_cols(BlockId b, Index r_s, Index r_f) noexcept {
  return feature_size(block_feature(b), r_s, r_f);
}

/// Blocks of one physics row in data-matrix column order [1, q_s, q_f, q_s(x)q_s, q_s(x)q_f, q_f(x)q_f].
inline std::array<BlockId, 6> row_blocks(Physics p) {
  if (p == Physics::structural)
    return {BlockId::c_s, BlockId::A_s, BlockId::E_s, BlockId::H_s, BlockId::L_s, BlockId::G_s};
  return {BlockId::c_f, BlockId::E_f, BlockId::A_f, BlockId::G_f, BlockId::L_f, BlockId::H_f};
}

enum class BlockMode { learn, zero, known };

struct BlockSpec {
  BlockMode mode = BlockMode::learn;
  MatrixXd value;  // used when mode == known
};

/// Per-block LEARN / ZERO / KNOWN(value) flags.
class StructureMask {
 public:
  static StructureMask all_learn() { return StructureMask{}; }

  /// Linear structure, linear coupling, quadratic fluid:
  /// H_s, L_s, G_s, L_f, G_f are zero.
  static StructureMask agard_like() {
    StructureMask m;
    for (auto b : {BlockId::H_s, BlockId::L_s, BlockId::G_s, BlockId::L_f, BlockId::G_f}) m.set_zero(b);
    return m;
  }

  static StructureMask from_preset(const std::string& name) {
    if (name == "agard" || name == "agard-like") return agard_like();
    if (name == "general" || name == "all-learn") return all_learn();
    throw ConfigError("unknown mask preset '" + name + "' (expected agard or general)");
  }

  BlockMode mode(BlockId b) const noexcept { return specs_[idx(b)].mode; }
  const BlockSpec& spec(BlockId b) const noexcept { return specs_[idx(b)]; }
  bool learns(BlockId b) const noexcept { return mode(b) == BlockMode::learn; }

  StructureMask& set_learn(BlockId b) {
    specs_[idx(b)] = BlockSpec{};
    return *this;
  }
  StructureMask& set_zero(BlockId b) {
    specs_[idx(b)] = BlockSpec{BlockMode::zero, {}};
    return *this;
  }
  StructureMask& set_known(BlockId b, MatrixXd value) {
    specs_[idx(b)] = BlockSpec{BlockMode::known, std::move(value)};
    return *this;
  }

  /// Throws ShapeError when a KNOWN value has the wrong shape for (r_s, r_f).
  void validate(Index r_s, Index r_f) const {
    for (auto b : kAllBlocks) {
      const auto& s = spec(b);
      if (s.mode != BlockMode::known) continue;
      if (s.value.rows() != block_rows(b, r_s, r_f) || s.value.cols() != block_cols(b, r_s, r_f))
        throw ShapeError("known block " + std::string(block_name(b)) + " has shape " + std::to_string(s.value.rows()) +
                         "x" + std::to_string(s.value.cols()) + ", expected " +
                         std::to_string(block_rows(b, r_s, r_f)) + "x" + std::to_string(block_cols(b, r_s, r_f)));
    }
  }

 private:
  static std::size_t idx(BlockId b) noexcept { return static_cast<std::size_t>(b); }
  std::array<BlockSpec, kBlockCount> specs_{};
};

enum class OperatorKind { monolithic, block };

/// Reduced operators. Block kind stores only present blocks (absent == zero);
/// monolithic kind stores c, A, H over r = r_s + r_f with compact H.
class OperatorSet {
 public:
  static OperatorSet make_block(Index r_s, Index r_f) {
    check_dims(r_s, r_f);
    OperatorSet o;
    o.kind_ = OperatorKind::block;
    o.r_s_ = r_s;
    o.r_f_ = r_f;
    return o;
  }

  static OperatorSet make_monolithic(Index r_s, Index r_f, VectorXd c, MatrixXd A, MatrixXd H) {
    check_dims(r_s, r_f);
    const Index r = r_s + r_f;
    if (c.size() != r || A.rows() != r || A.cols() != r || H.rows() != r || H.cols() != compact_size(r))
      throw ShapeError("make_monolithic: operator shapes do not match r = " + std::to_string(r));
    OperatorSet o;
    o.kind_ = OperatorKind::monolithic;
    o.r_s_ = r_s;
    o.r_f_ = r_f;
    o.c_ = std::move(c);
    o.A_ = std::move(A);
    o.H_ = std::move(H);
    return o;
  }

  OperatorKind kind() const noexcept { return kind_; }
  Index r_s() const noexcept { return r_s_; }
  Index r_f() const noexcept { return r_f_; }
  Index r() const noexcept { return r_s_ + r_f_; }

  bool has(BlockId b) const noexcept { return blocks_[static_cast<std::size_t>(b)].has_value(); }

  const MatrixXd& block(BlockId b) const {
    require_block_kind();
    const auto& m = blocks_[static_cast<std::size_t>(b)];
    if (!m) throw DomainError("operator block " + std::string(block_name(b)) + " is absent");
    return *m;
  }

  void set_block(BlockId b, MatrixXd value) {
    require_block_kind();
    if (value.rows() != block_rows(b, r_s_, r_f_) || value.cols() != block_cols(b, r_s_, r_f_))
      throw ShapeError("set_block " + std::string(block_name(b)) + ": got " + std::to_string(value.rows()) + "x" +
                       std::to_string(value.cols()) + ", expected " + std::to_string(block_rows(b, r_s_, r_f_)) + "x" +
                       std::to_string(block_cols(b, r_s_, r_f_)));
    blocks_[static_cast<std::size_t>(b)] = std::move(value);
  }

  void erase(BlockId b) { blocks_[static_cast<std::size_t>(b)].reset(); }

  const VectorXd& c() const { return require_mono(), c_; }
  const MatrixXd& A() const { return require_mono(), A_; }
  const MatrixXd& H() const { return require_mono(), H_; }

  /// Number of stored operator entries.
  Index stored_entries() const noexcept {
    if (kind_ == OperatorKind::monolithic) return c_.size() + A_.size() + H_.size();
    Index n = 0;
    for (const auto& m : blocks_)
      if (m) n += m->size();
    return n;
  }

 private:
  static void check_dims(Index r_s, Index r_f) {
    if (r_s < 1 || r_f < 1) throw InvalidDimensionError("OperatorSet: r_s and r_f must be positive");
  }
  void require_block_kind() const {
    if (kind_ != OperatorKind::block) throw DomainError("OperatorSet: block access on a monolithic operator set");
  }
  void require_mono() const {
    if (kind_ != OperatorKind::monolithic) throw DomainError("OperatorSet: monolithic access on a block operator set");
  }

  OperatorKind kind_ = OperatorKind::block;
  Index r_s_ = 0, r_f_ = 0;
  std::array<std::optional<MatrixXd>, kBlockCount> blocks_{};
  VectorXd c_;
  MatrixXd A_, H_;
};

/// Embeds a block operator set into the equivalent monolithic (c, A, H).
inline OperatorSet to_monolithic(const OperatorSet& ops) {
  if (ops.kind() == OperatorKind::monolithic) return ops;
  const Index rs = ops.r_s(), rf = ops.r_f(), r = rs + rf;
  auto get = [&](BlockId b) -> MatrixXd {
    return ops.has(b) ? ops.block(b) : MatrixXd::Zero(block_rows(b, rs, rf), block_cols(b, rs, rf));
  };
  VectorXd c(r);
  c << get(BlockId::c_s), get(BlockId::c_f);
  MatrixXd A(r, r);
  A << get(BlockId::A_s), get(BlockId::E_s), get(BlockId::E_f), get(BlockId::A_f);
  MatrixXd H = MatrixXd::Zero(r, compact_size(r));
  const MatrixXd Hs = get(BlockId::H_s), Ls = get(BlockId::L_s), Gs = get(BlockId::G_s);
  const MatrixXd Hf = get(BlockId::H_f), Lf = get(BlockId::L_f), Gf = get(BlockId::G_f);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      const Index col = compact_index(i, j, r);
      if (j < rs) {
        const Index k = compact_index(i, j, rs);
        H.block(0, col, rs, 1) = Hs.col(k);
        H.block(rs, col, rf, 1) = Gf.col(k);
      } else if (i < rs) {
        const Index k = i * rf + (j - rs);
        H.block(0, col, rs, 1) = Ls.col(k);
        H.block(rs, col, rf, 1) = Lf.col(k);
      } else {
        const Index k = compact_index(i - rs, j - rs, rf);
        H.block(0, col, rs, 1) = Gs.col(k);
        H.block(rs, col, rf, 1) = Hf.col(k);
      }
    }
  }
  return OperatorSet::make_monolithic(rs, rf, std::move(c), std::move(A), std::move(H));
}

/// Allocation-free right-hand side evaluation. Absent blocks cost nothing.
/// Holds a reference: `ops` must outlive the evaluator.
class RhsEvaluator {
 public:
  explicit RhsEvaluator(const OperatorSet& ops) : ops_(&ops) {
    const Index rs = ops.r_s(), rf = ops.r_f();
    if (ops.kind() == OperatorKind::monolithic) {
      kron_.resize(compact_size(ops.r()));
      return;
    }
    for (auto b : kAllBlocks) {
      if (!ops.has(b)) continue;
      terms_.push_back(Term{&ops.block(b), block_feature(b), block_row(b)});
      switch (block_feature(b)) {
        case Feature::kron_s: need_kron_s_ = true; break;
        case Feature::kron_f: need_kron_f_ = true; break;
        case Feature::cross: need_cross_ = true; break;
        default: break;
      }
    }
    if (need_kron_s_) kron_s_.resize(compact_size(rs));
    if (need_kron_f_) kron_f_.resize(compact_size(rf));
    if (need_cross_) cross_.resize(rs * rf);
  }

  Index dim() const noexcept { return ops_->r(); }

  void operator()(const VectorXd& q, VectorXd& out) {
    out.resize(ops_->r());
    if (ops_->kind() == OperatorKind::monolithic) {
      compact_self_kron_into(q, kron_);
      out = ops_->c();
      out.noalias() += ops_->A() * q;
      out.noalias() += ops_->H() * kron_;
      return;
    }
    const Index rs = ops_->r_s(), rf = ops_->r_f();
    const auto qs = q.head(rs);
    const auto qf = q.tail(rf);
    if (need_kron_s_) compact_self_kron_into(qs, kron_s_);
    if (need_kron_f_) compact_self_kron_into(qf, kron_f_);
    if (need_cross_) cross_kron_into(qs, qf, cross_);
    out.setZero();
    for (const auto& t : terms_) {
      auto dst = t.row == Physics::structural ? out.head(rs) : out.tail(rf);
      switch (t.feature) {
        case Feature::constant: dst += t.M->col(0); break;
        case Feature::q_s: dst.noalias() += *t.M * qs; break;
        case Feature::q_f: dst.noalias() += *t.M * qf; break;
        case Feature::kron_s: dst.noalias() += *t.M * kron_s_; break;
        case Feature::kron_f: dst.noalias() += *t.M * kron_f_; break;
        case Feature::cross: dst.noalias() += *t.M * cross_; break;
      }
    }
  }

  VectorXd operator()(const VectorXd& q) {
    VectorXd out;
    (*this)(q, out);
    return out;
  }

 private:
  struct Term {
    const MatrixXd* M;
    Feature feature;
    Physics row;
  };
  const OperatorSet* ops_;
  std::vector<Term> terms_;
  bool need_kron_s_ = false, need_kron_f_ = false, need_cross_ = false;
  VectorXd kron_, kron_s_, kron_f_, cross_;
};

inline constexpr std::uint32_t kOperatorFormatVersion = 1;

inline io::Writer encode_operators(const OperatorSet& ops) {
  io::Writer w;
  w.bytes("OPIO", 4);
  w.u32(kOperatorFormatVersion);
  w.u32(ops.kind() == OperatorKind::monolithic ? 0u : 1u);
  w.u64(static_cast<std::uint64_t>(ops.r_s()));
  w.u64(static_cast<std::uint64_t>(ops.r_f()));
  auto section = [&w](std::string_view name, const MatrixXd& m) {
    w.str(std::string(name));
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    w.matrix_data(m);
  };
  if (ops.kind() == OperatorKind::monolithic) {
    w.u32(3);
    section("c", ops.c());
    section("A", ops.A());
    section("H", ops.H());
  } else {
    std::uint32_t n = 0;
    for (auto b : kAllBlocks) n += ops.has(b) ? 1u : 0u;
    w.u32(n);
    for (auto b : kAllBlocks)
      if (ops.has(b)) section(block_name(b), ops.block(b));
  }
  return w;
}

inline void write_operators(const OperatorSet& ops, const std::string& path) { encode_operators(ops).save(path); }

inline OperatorSet decode_operators(io::Reader& r) {
  r.expect_magic("OPIO");
  const auto at = r.offset();
  if (const auto v = r.u32(); v != kOperatorFormatVersion)
    throw FormatError("unsupported operator format version " + std::to_string(v), at);
  const auto kind_at = r.offset();
  const auto kind = r.u32();
  if (kind > 1) throw FormatError("unknown operator kind " + std::to_string(kind), kind_at);
  const auto rs = static_cast<Index>(r.u64());
  const auto rf = static_cast<Index>(r.u64());
  const auto count = r.u32();
  std::vector<std::pair<std::string, MatrixXd>> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    const auto rows = r.u64();
    const auto cols = r.u64();
    sections.emplace_back(std::move(name), r.matrix_data(rows, cols));
  }
  const auto end = r.offset();
  r.expect_end();
  try {
    if (kind == 0) {
      const MatrixXd* c = nullptr;
      const MatrixXd* A = nullptr;
      const MatrixXd* H = nullptr;
      for (const auto& [name, m] : sections) {
        if (name == "c") c = &m;
        else if (name == "A") A = &m;
        else if (name == "H") H = &m;
        else throw FormatError("unexpected monolithic section '" + name + "'", end);
      }
      if (!c || !A || !H) throw FormatError("monolithic operator file lacks c, A or H", end);
      if (c->cols() != 1) throw FormatError("monolithic c must be a column", end);
      return OperatorSet::make_monolithic(rs, rf, c->col(0), *A, *H);
    }
    auto ops = OperatorSet::make_block(rs, rf);
    for (auto& [name, m] : sections) {
      const BlockId b = block_from_name(name);
      if (ops.has(b)) throw FormatError("duplicate section '" + name + "'", end);
      ops.set_block(b, std::move(m));
    }
    return ops;
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid operator contents: ") + e.what(), end);
  }
}

inline OperatorSet read_operators(const std::string& path) {
  auto r = io::Reader::from_file(path);
  return decode_operators(r);
}

}  // namespace bopinf
