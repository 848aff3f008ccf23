#pragma once

// Snapshot data model, specific-volume lifting, shift/scale preprocessing and
// the binary snapshot file format.
//
// File layout (all integers and floats little-endian):
//   "OPIF" | u32 version=1 | u64 n | u64 k | f64 dt | f64 t0
//   | u32 group_count | { u32 name_len | name bytes | u64 size } * group_count
//   | n*k f64 values, column-major

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "blockopinf/binary_io.hpp"
#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct VariableGroup {
  std::string name;
  Index size = 0;

  friend bool operator==(const VariableGroup&, const VariableGroup&) = default;
};

/// Ordered row groups of a snapshot matrix, e.g. pressure, velocities, density.
class VariableLayout {
 public:
  VariableLayout() = default;
  explicit VariableLayout(std::vector<VariableGroup> groups) : groups_(std::move(groups)) {
    std::set<std::string> seen;
    for (const auto& g : groups_) {
      if (g.size <= 0) throw InvalidDimensionError("variable group '" + g.name + "' has nonpositive size");
      if (!seen.insert(g.name).second) throw DomainError("duplicate variable group name '" + g.name + "'");
    }
  }

  const std::vector<VariableGroup>& groups() const noexcept { return groups_; }
  std::size_t count() const noexcept { return groups_.size(); }
  const VariableGroup& operator[](std::size_t i) const { return groups_.at(i); }

  Index total() const noexcept {
    Index n = 0;
    for (const auto& g : groups_) n += g.size;
    return n;
  }

  Index offset(std::size_t group) const {
    Index off = 0;
    for (std::size_t i = 0; i < group; ++i) off += groups_.at(i).size;
    return off;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < groups_.size(); ++i)
      if (groups_[i].name == name) return i;
    return std::nullopt;
  }

  VariableLayout renamed(std::size_t group, std::string name) const {
    auto g = groups_;
    g.at(group).name = std::move(name);
    return VariableLayout(std::move(g));
  }

  friend bool operator==(const VariableLayout&, const VariableLayout&) = default;

 private:
  std::vector<VariableGroup> groups_;
};

/// Time-ordered state snapshots (columns) with layout and timing metadata.
class SnapshotSet {
 public:
  SnapshotSet(MatrixXd data, double dt, VariableLayout layout, double t0 = 0.0)
      : data_(std::move(data)), dt_(dt), t0_(t0), layout_(std::move(layout)) {
    if (data_.cols() < 1) throw InvalidDimensionError("SnapshotSet: at least one snapshot required");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw DomainError("SnapshotSet: dt must be positive");
    if (!std::isfinite(t0_)) throw DomainError("SnapshotSet: t0 must be finite");
    if (layout_.total() != data_.rows())
      throw ShapeError("SnapshotSet: layout covers " + std::to_string(layout_.total()) + " rows but data has " +
                       std::to_string(data_.rows()));
    if (!data_.allFinite()) throw NumericError("SnapshotSet: non-finite entries");
  }

  const MatrixXd& data() const noexcept { return data_; }
  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  const VariableLayout& layout() const noexcept { return layout_; }
  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  double time(Index column) const noexcept { return t0_ + static_cast<double>(column) * dt_; }

  /// Columns [first, first + count) as a new set with shifted t0.
  SnapshotSet columns(Index first, Index count) const {
    if (first < 0 || count < 1 || first + count > cols()) throw ShapeError("SnapshotSet::columns: range out of bounds");
    return SnapshotSet(data_.middleCols(first, count), dt_, layout_, time(first));
  }

  /// Rows of group `g` as a block view.
  auto group_rows(std::size_t g) const { return data_.middleRows(layout_.offset(g), layout_[g].size); }

  SnapshotSet with_data(MatrixXd data) const { return SnapshotSet(std::move(data), dt_, layout_, t0_); }
  SnapshotSet with_data(MatrixXd data, VariableLayout layout) const {
    return SnapshotSet(std::move(data), dt_, std::move(layout), t0_);
  }

  friend bool operator==(const SnapshotSet& a, const SnapshotSet& b) {
    return a.dt_ == b.dt_ && a.t0_ == b.t0_ && a.layout_ == b.layout_ && a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  MatrixXd data_;
  double dt_;
  double t0_;
  VariableLayout layout_;
};

inline constexpr const char* kDensityGroup = "density";
inline constexpr const char* kSpecificVolumeGroup = "specific-volume";

/// Replaces the density group by its reciprocal (specific volume).
inline SnapshotSet lift_specific_volume(const SnapshotSet& s) {
  const auto g = s.layout().find(kDensityGroup);
  if (!g) throw DomainError("lift_specific_volume: layout has no '" + std::string(kDensityGroup) + "' group");
  MatrixXd data = s.data();
  const Index off = s.layout().offset(*g);
  for (Index t = 0; t < data.cols(); ++t) {
    for (Index i = off; i < off + s.layout()[*g].size; ++i) {
      if (!(data(i, t) > 0.0))
        throw DomainError("lift_specific_volume: nonpositive density at row " + std::to_string(i) + ", column " +
                          std::to_string(t));
      data(i, t) = 1.0 / data(i, t);
    }
  }
  return s.with_data(std::move(data), s.layout().renamed(*g, kSpecificVolumeGroup));
}

struct Range {
  double lo = -1.0;
  double hi = 1.0;

  friend bool operator==(const Range&, const Range&) = default;
};

enum class ShiftMode { group_scalar, row_mean };

/// Target ranges per group name. Groups without an entry pass through unchanged.
using TargetRanges = std::map<std::string, Range>;

/// [0, 1] for specific volume, [-1, 1] for every other group not listed in `passthrough`.
inline TargetRanges default_targets(const VariableLayout& layout, const std::set<std::string>& passthrough = {}) {
  TargetRanges t;
  for (const auto& g : layout.groups()) {
    if (passthrough.count(g.name)) continue;
    t[g.name] = g.name == kSpecificVolumeGroup ? Range{0.0, 1.0} : Range{-1.0, 1.0};
  }
  return t;
}

/// Per-group affine transform y = gain * (x - shift) + offset fitted on training data.
struct GroupTransform {
  std::string name;
  Index size = 0;
  bool passthrough = false;
  VectorXd shift;  // length 1 (group_scalar) or `size` (row_mean)
  double gain = 1.0;
  double offset = 0.0;
  Range target;
};

class Preprocessor {
 public:
  Preprocessor() = default;
  Preprocessor(VariableLayout layout, ShiftMode mode, std::vector<GroupTransform> groups)
      : layout_(std::move(layout)), mode_(mode), groups_(std::move(groups)) {
    if (groups_.size() != layout_.count()) throw ShapeError("Preprocessor: one transform per group required");
    for (const auto& g : groups_)
      if (!(g.gain > 0.0)) throw DomainError("Preprocessor: gain of group '" + g.name + "' must be positive");
  }

  const VariableLayout& layout() const noexcept { return layout_; }
  ShiftMode mode() const noexcept { return mode_; }
  const std::vector<GroupTransform>& groups() const noexcept { return groups_; }

  /// Per-row gain g and bias b of the affine map y = g x + b.
  VectorXd row_gain() const {
    VectorXd g(layout_.total());
    Index off = 0;
    for (const auto& t : groups_) {
      g.segment(off, t.size).setConstant(t.passthrough ? 1.0 : t.gain);
      off += t.size;
    }
    return g;
  }
  VectorXd row_bias() const {
    VectorXd b(layout_.total());
    Index off = 0;
    for (const auto& t : groups_) {
      for (Index i = 0; i < t.size; ++i)
        b(off + i) = t.passthrough ? 0.0 : t.offset - t.gain * shift_of(t, i);
      off += t.size;
    }
    return b;
  }

  SnapshotSet apply(const SnapshotSet& s) const {
    check_layout(s);
    MatrixXd y = s.data();
    for_each_row(y, [](double x, double g, double sh, double o) { return g * (x - sh) + o; });
    return s.with_data(std::move(y));
  }

  SnapshotSet invert(const SnapshotSet& s) const {
    check_layout(s);
    MatrixXd x = s.data();
    for_each_row(x, [](double y, double g, double sh, double o) { return (y - o) / g + sh; });
    return s.with_data(std::move(x));
  }

  /// Same maps on a bare state matrix whose rows follow the fit layout.
  MatrixXd apply(const Eigen::Ref<const MatrixXd>& m) const {
    check_rows(m.rows());
    MatrixXd y = m;
    for_each_row(y, [](double x, double g, double sh, double o) { return g * (x - sh) + o; });
    return y;
  }
  MatrixXd invert(const Eigen::Ref<const MatrixXd>& m) const {
    check_rows(m.rows());
    MatrixXd x = m;
    for_each_row(x, [](double y, double g, double sh, double o) { return (y - o) / g + sh; });
    return x;
  }

 private:
  static double shift_of(const GroupTransform& t, Index i) { return t.shift.size() == 1 ? t.shift(0) : t.shift(i); }

  void check_layout(const SnapshotSet& s) const {
    if (!(s.layout() == layout_)) throw ShapeError("Preprocessor: snapshot layout differs from the fit layout");
  }
  void check_rows(Index rows) const {
    if (rows != layout_.total()) throw ShapeError("Preprocessor: row count differs from the fit layout");
  }

  template <typename F>
  void for_each_row(MatrixXd& m, F&& f) const {
    Index off = 0;
    for (const auto& t : groups_) {
      if (!t.passthrough) {
        for (Index i = 0; i < t.size; ++i) {
          const double sh = shift_of(t, i);
          for (Index c = 0; c < m.cols(); ++c) m(off + i, c) = f(m(off + i, c), t.gain, sh, t.offset);
        }
      }
      off += t.size;
    }
  }

  VariableLayout layout_;
  ShiftMode mode_ = ShiftMode::group_scalar;
  std::vector<GroupTransform> groups_;
};

struct PreprocessOptions {
  ShiftMode mode = ShiftMode::group_scalar;
  /// Constant groups get gain 1 instead of raising DegenerateError.
  bool tolerate_constant = false;
};

/// Fits shift (temporal mean) and min/max range scaling for every targeted group.
inline Preprocessor fit_shift_scale(const SnapshotSet& s, const TargetRanges& targets, PreprocessOptions opts = {}) {
  for (const auto& [name, range] : targets) {
    if (!s.layout().find(name)) throw ShapeError("fit_shift_scale: no group named '" + name + "'");
    if (!(range.hi > range.lo)) throw DomainError("fit_shift_scale: empty target range for '" + name + "'");
  }
  std::vector<GroupTransform> out;
  for (std::size_t gi = 0; gi < s.layout().count(); ++gi) {
    const auto& g = s.layout()[gi];
    GroupTransform t;
    t.name = g.name;
    t.size = g.size;
    const auto it = targets.find(g.name);
    if (it == targets.end()) {
      t.passthrough = true;
      t.shift = VectorXd::Zero(1);
      out.push_back(std::move(t));
      continue;
    }
    t.target = it->second;
    const auto rows = s.group_rows(gi);
    MatrixXd shifted;
    if (opts.mode == ShiftMode::group_scalar) {
      t.shift = VectorXd::Constant(1, rows.mean());
      shifted = rows.array() - t.shift(0);
    } else {
      t.shift = rows.rowwise().mean();
      shifted = rows.colwise() - t.shift;
    }
    const double lo = shifted.minCoeff();
    const double hi = shifted.maxCoeff();
    const double spread = hi - lo;
    if (!(spread > 0.0)) {
      if (!opts.tolerate_constant) throw DegenerateError("fit_shift_scale: group '" + g.name + "' has zero spread");
      t.gain = 1.0;
      t.offset = 0.0;
    } else {
      t.gain = (t.target.hi - t.target.lo) / spread;
      t.offset = t.target.lo - t.gain * lo;
    }
    out.push_back(std::move(t));
  }
  return Preprocessor(s.layout(), opts.mode, std::move(out));
}

inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

inline io::Writer encode_snapshots(const SnapshotSet& s) {
  io::Writer w;
  w.bytes("OPIF", 4);
  w.u32(kSnapshotFormatVersion);
  w.u64(static_cast<std::uint64_t>(s.rows()));
  w.u64(static_cast<std::uint64_t>(s.cols()));
  w.f64(s.dt());
  w.f64(s.t0());
  w.u32(static_cast<std::uint32_t>(s.layout().count()));
  for (const auto& g : s.layout().groups()) {
    w.str(g.name);
    w.u64(static_cast<std::uint64_t>(g.size));
  }
  w.matrix_data(s.data());
  return w;
}

inline void write_snapshots(const SnapshotSet& s, const std::string& path) { encode_snapshots(s).save(path); }

inline SnapshotSet decode_snapshots(io::Reader& r) {
  r.expect_magic("OPIF");
  const auto version_at = r.offset();
  const auto version = r.u32();
  if (version != kSnapshotFormatVersion)
    throw FormatError("unsupported snapshot format version " + std::to_string(version), version_at);
  const auto n = r.u64();
  const auto k = r.u64();
  const double dt = r.f64();
  const double t0 = r.f64();
  const auto ngroups = r.u32();
  std::vector<VariableGroup> groups;
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < ngroups; ++i) {
    VariableGroup g;
    g.name = r.str();
    g.size = static_cast<Index>(r.u64());
    total += static_cast<std::uint64_t>(g.size);
    groups.push_back(std::move(g));
  }
  const auto layout_end = r.offset();
  if (total != n) throw FormatError("layout covers " + std::to_string(total) + " rows, header says " + std::to_string(n), layout_end);
  MatrixXd data = r.matrix_data(n, k);
  r.expect_end();
  try {
    return SnapshotSet(std::move(data), dt, VariableLayout(std::move(groups)), t0);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid snapshot contents: ") + e.what(), layout_end);
  }
}

inline SnapshotSet read_snapshots(const std::string& path) {
  auto r = io::Reader::from_file(path);
  return decode_snapshots(r);
}

/// One row per time instant; header is `time` followed by `<group>_<index>`.
inline csv::Table snapshots_csv(const SnapshotSet& s) {
  std::vector<std::string> header{"time"};
  for (const auto& g : s.layout().groups())
    for (Index i = 0; i < g.size; ++i) header.push_back(g.name + "_" + std::to_string(i));
  csv::Table table(std::move(header));
  for (Index t = 0; t < s.cols(); ++t) {
    std::vector<std::string> row{csv::fmt(s.time(t))};
    for (Index i = 0; i < s.rows(); ++i) row.push_back(csv::fmt(s.data()(i, t)));
    table.add_row(std::move(row));
  }
  return table;
}

}  // namespace bopinf
