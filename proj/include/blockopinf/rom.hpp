#pragma once

// Reduced model evaluation and integration, QoI extraction through the basis
// and preprocessing, the relative RMSE metric and the bounded growth check.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"
#include "blockopinf/ode.hpp"
#include "blockopinf/operators.hpp"
#include "blockopinf/pod.hpp"
#include "blockopinf/snapshots.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline constexpr double kBlowUpThreshold = 1e10;

inline VectorXd rom_rhs(const OperatorSet& ops, const Eigen::Ref<const VectorXd>& q) {
  if (q.size() != ops.r()) throw ShapeError("rom_rhs: state size does not match the operator dimension");
  if (!q.allFinite()) throw NumericError("rom_rhs: non-finite state");
  RhsEvaluator f(ops);
  return f(VectorXd(q));
}

struct RomTrajectory {
  MatrixXd states;  // r x (computed columns)
  double dt = 0.0;
  double t0 = 0.0;
  Index r_s = 0;
  Index r_f = 0;
  std::optional<Index> blowup_step;

  bool blew_up() const noexcept { return blowup_step.has_value(); }
  Index cols() const noexcept { return states.cols(); }
};

/// RK4 with `columns` snapshots. A state that is non-finite or exceeds
/// `threshold` in magnitude ends the run and sets `blowup_step`.
inline RomTrajectory integrate_rom(const OperatorSet& ops, const Eigen::Ref<const VectorXd>& q0, double dt,
                                   Index columns, double t0 = 0.0, double threshold = kBlowUpThreshold) {
  if (q0.size() != ops.r()) throw ShapeError("integrate_rom: initial state size mismatch");
  RhsEvaluator f(ops);
  auto traj = rk4_integrate(f, q0, dt, columns, threshold);
  return RomTrajectory{std::move(traj.states), dt, t0, ops.r_s(), ops.r_f(), traj.blowup_column};
}

struct QoiSeries {
  std::string name;
  VectorXd values;
  double dt = 0.0;
  double t0 = 0.0;
};

/// Affine functional of the reduced state: value = coeffs * q + offset.
struct QoiFunctional {
  std::string name;
  RowVectorXd coeffs;
  double offset = 0.0;

  VectorXd evaluate(const Eigen::Ref<const MatrixXd>& Q) const {
    if (Q.rows() != coeffs.size()) throw ShapeError("QoiFunctional '" + name + "': state size mismatch");
    return ((coeffs * Q).array() + offset).transpose();
  }
};

/// Pulls the physical functional w^T x back through x = P^{-1}(V q):
/// with y = g .* x + b, w^T x = (w ./ g)^T V q - sum(w .* b ./ g).
inline QoiFunctional pullback_functional(std::string name, const Eigen::Ref<const VectorXd>& w_physical,
                                         const CoupledBasis& basis, const Preprocessor* pre = nullptr) {
  const Index n = basis.n_s() + basis.n_f();
  if (w_physical.size() != n) throw ShapeError("pullback_functional: weight vector must cover the full state");
  VectorXd wg = w_physical;
  double offset = 0.0;
  if (pre) {
    if (pre->layout().total() != n) throw ShapeError("pullback_functional: preprocessor layout mismatch");
    const VectorXd g = pre->row_gain();
    const VectorXd b = pre->row_bias();
    wg = w_physical.cwiseQuotient(g);
    offset = -wg.dot(b);
  }
  QoiFunctional f{std::move(name), RowVectorXd(basis.r_s() + basis.r_f()), offset};
  f.coeffs.head(basis.r_s()) = wg.head(basis.n_s()).transpose() * basis.structural.vectors;
  f.coeffs.tail(basis.r_f()) = wg.tail(basis.n_f()).transpose() * basis.fluid.vectors;
  return f;
}

/// Structural coordinate `index` as a functional (gdisp_i is index i - 1,
/// gvel_i is index m + i - 1).
inline QoiFunctional structural_functional(std::string name, Index index, const CoupledBasis& basis,
                                           const Preprocessor* pre = nullptr) {
  if (index < 0 || index >= basis.n_s())
    throw DomainError("structural_functional: index " + std::to_string(index) + " out of range");
  VectorXd w = VectorXd::Zero(basis.n_s() + basis.n_f());
  w(index) = 1.0;
  return pullback_functional(std::move(name), w, basis, pre);
}

inline QoiSeries extract_qoi(const RomTrajectory& traj, const QoiFunctional& f) {
  return QoiSeries{f.name, f.evaluate(traj.states), traj.dt, traj.t0};
}

/// Inclusive column window [first, last].
struct Window {
  Index first = 0;
  Index last = -1;  // inclusive; -1 means through the end
};

/// RMSE over the window divided by the range of the reference series there.
inline double relative_rmse(const Eigen::Ref<const VectorXd>& fom, const Eigen::Ref<const VectorXd>& rom,
                            Window w = {}) {
  const Index last = w.last < 0 ? fom.size() - 1 : w.last;
  if (w.first < 0 || last < w.first || last >= fom.size())
    throw ShapeError("relative_rmse: window out of range for the reference series");
  if (last >= rom.size()) throw ShapeError("relative_rmse: model series is shorter than the window");
  const Index n = last - w.first + 1;
  const auto a = fom.segment(w.first, n);
  const auto b = rom.segment(w.first, n);
  const double range = a.maxCoeff() - a.minCoeff();
  if (!(range > 0.0)) throw DegenerateError("relative_rmse: reference series has zero range in the window");
  const double rmse = std::sqrt((a - b).squaredNorm() / static_cast<double>(n));
  return rmse / range;
}

struct GrowthCheck {
  bool pass = true;
  std::optional<Index> coordinate;  // first offending coordinate
  std::optional<Index> column;      // column where it first exceeded the bound
  double worst_ratio = 0.0;         // max over coordinates of test deviation / (alpha * scale)
};

/// Every reduced coordinate must stay within alpha times its training
/// deviation from the training mean. Coordinates with zero training
/// deviation use the largest deviation across coordinates.
inline GrowthCheck bounded_growth_check(const Eigen::Ref<const MatrixXd>& train, const Eigen::Ref<const MatrixXd>& test,
                                        double alpha, bool test_blew_up = false) {
  if (!(alpha > 0.0)) throw DomainError("bounded_growth_check: alpha must be positive");
  if (train.rows() != test.rows()) throw ShapeError("bounded_growth_check: trajectories differ in dimension");
  if (train.cols() < 1) throw InvalidDimensionError("bounded_growth_check: empty training trajectory");
  GrowthCheck res;
  if (test_blew_up || !test.allFinite()) {
    res.pass = false;
    res.worst_ratio = std::numeric_limits<double>::infinity();
    return res;
  }
  const VectorXd mean = train.rowwise().mean();
  const VectorXd dev = (train.colwise() - mean).cwiseAbs().rowwise().maxCoeff();
  const double fallback = dev.maxCoeff();
  for (Index i = 0; i < train.rows(); ++i) {
    const double scale = dev(i) > 0.0 ? dev(i) : fallback;
    const double bound = alpha * scale;
    for (Index t = 0; t < test.cols(); ++t) {
      const double d = std::abs(test(i, t) - mean(i));
      const double ratio = bound > 0.0 ? d / bound : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      res.worst_ratio = std::max(res.worst_ratio, ratio);
      if (d > bound && res.pass) {
        res.pass = false;
        res.coordinate = i;
        res.column = t;
      }
    }
  }
  return res;
}

/// time, then one column per series.
inline csv::Table qoi_csv(const std::vector<QoiSeries>& series) {
  if (series.empty()) throw InvalidDimensionError("qoi_csv: no series");
  std::vector<std::string> header{"time"};
  for (const auto& s : series) header.push_back(s.name);
  csv::Table t(header);
  const Index n = series.front().values.size();
  for (const auto& s : series)
    if (s.values.size() != n) throw ShapeError("qoi_csv: series lengths differ");
  for (Index i = 0; i < n; ++i) {
    std::vector<std::string> row{csv::fmt(series.front().t0 + static_cast<double>(i) * series.front().dt)};
    for (const auto& s : series) row.push_back(csv::fmt(s.values(i)));
    t.add_row(std::move(row));
  }
  return t;
}

struct RhsTiming {
  Index reps = 0;
  Index calls_per_rep = 0;
  double median_ns = 0.0;
  double p25_ns = 0.0;
  double p75_ns = 0.0;
};

namespace detail {

// Linear interpolation between order statistics.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Per-call wall time of the right-hand side over the columns of `states`,
/// repeated `reps` times on the calling thread.
inline RhsTiming time_rhs(const OperatorSet& ops, const Eigen::Ref<const MatrixXd>& states, Index reps = 50,
                          Index calls_per_rep = 2000) {
  if (states.rows() != ops.r() || states.cols() < 1) throw ShapeError("time_rhs: states do not match the operators");
  if (reps < 1 || calls_per_rep < 1) throw DomainError("time_rhs: repetition counts must be positive");
  RhsEvaluator f(ops);
  VectorXd q(ops.r()), out(ops.r());
  double sink = 0.0;
  std::vector<double> per_call;
  per_call.reserve(static_cast<std::size_t>(reps));
  for (Index rep = 0; rep < reps; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (Index i = 0; i < calls_per_rep; ++i) {
      q = states.col(i % states.cols());
      f(q, out);
      sink += out(0);
    }
    const auto t1 = std::chrono::steady_clock::now();
    per_call.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(calls_per_rep));
  }
  volatile double keep = sink;
  (void)keep;
  return RhsTiming{reps, calls_per_rep, detail::percentile(per_call, 0.5), detail::percentile(per_call, 0.25),
                   detail::percentile(per_call, 0.75)};
}

}  // namespace bopinf
