#pragma once

// Two-stage regularization grid search (logarithmic, then linear around the
// incumbent) with bounded-growth feasibility filtering.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"
#include "blockopinf/opinf.hpp"
#include "blockopinf/rom.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Spacing { log, linear };

struct Axis {
  double lo = 1e-6;
  double hi = 1e4;
  Index count = 6;
  Spacing spacing = Spacing::log;
  /// When set, the grid point nearest to this value (interior points first)
  /// is replaced by it.
  std::optional<double> pin{};

  void validate() const {
    if (count < 1) throw ConfigError("grid axis count must be at least 1");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0) throw ConfigError("grid axis bounds must be finite and nonnegative");
    if (lo > hi) throw ConfigError("grid axis lower bound exceeds upper bound");
    if (lo == hi && count != 1) throw ConfigError("a degenerate grid axis must have count 1");
    if (lo < hi && count < 2) throw ConfigError("a nondegenerate grid axis needs at least 2 points");
    if (spacing == Spacing::log && lo == 0.0 && hi > 0.0) throw ConfigError("a logarithmic axis cannot start at 0");
  }

  std::vector<double> values() const {
    validate();
    if (count == 1) return {lo};
    std::vector<double> v(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(count - 1);
      v[static_cast<std::size_t>(i)] =
          spacing == Spacing::log ? std::pow(10.0, std::log10(lo) + s * (std::log10(hi) - std::log10(lo)))
                                  : lo + s * (hi - lo);
    }
    v.front() = lo;
    v.back() = hi;
    if (pin && *pin >= lo && *pin <= hi) {
      const auto first = count > 2 ? v.begin() + 1 : v.begin();
      const auto last = count > 2 ? v.end() - 1 : v.end();
      auto nearest = std::min_element(first, last, [p = *pin](double a, double b) {
        return std::abs(a - p) < std::abs(b - p);
      });
      *nearest = *pin;
    }
    return v;
  }
};

enum class Objective { tracked_qoi, full_state };

struct GridSpec {
  std::array<Axis, 3> axes{};
  double alpha = 10.0;
  std::vector<double> alpha_sweep;  // optional outer sweep; overrides alpha when nonempty
  bool refine = true;
  double refine_decades = 1.0;
  Index refine_count = 0;          // 0: same count as stage 1
  double time_budget_seconds = 0;  // 0: unlimited
  Objective objective = Objective::tracked_qoi;

  void validate() const {
    for (const auto& a : axes) a.validate();
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    for (double a : alpha_sweep)
      if (!(a > 0.0)) throw ConfigError("alpha sweep values must be positive");
    if (!(refine_decades > 0.0)) throw ConfigError("refinement span must be positive");
    if (refine_count < 0) throw ConfigError("refinement count must be nonnegative");
    if (time_budget_seconds < 0.0) throw ConfigError("time budget must be nonnegative");
  }
};

/// Everything a candidate evaluation needs.
struct TrainingBundle {
  Method method = Method::block;
  StructureMask mask = StructureMask::agard_like();
  Index r_s = 0;
  MatrixXd states;       // r x k_train reduced training trajectory, column 0 is the initial state
  MatrixXd fd_states;    // r x k_fd states aligned with `derivatives`
  MatrixXd derivatives;  // r x k_fd
  double dt = 0.0;
  std::vector<QoiFunctional> tracked;
  std::vector<VectorXd> truth;  // one training-window series per tracked functional

  void validate() const {
    if (states.cols() < 1 || states.rows() < 2) throw InvalidDimensionError("TrainingBundle: empty training states");
    if (fd_states.rows() != states.rows() || derivatives.rows() != states.rows() ||
        fd_states.cols() != derivatives.cols())
      throw ShapeError("TrainingBundle: inconsistent state and derivative matrices");
    if (!(dt > 0.0)) throw DomainError("TrainingBundle: dt must be positive");
    if (tracked.size() != truth.size()) throw ShapeError("TrainingBundle: one truth series per tracked QoI required");
    for (const auto& t : truth)
      if (t.size() != states.cols()) throw ShapeError("TrainingBundle: truth series must span the training window");
  }
};

enum class EvalStatus { evaluated, skipped };

struct Evaluation {
  int stage = 1;
  RegWeights weights;
  double alpha = 10.0;
  EvalStatus status = EvalStatus::evaluated;
  bool feasible = false;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::optional<Index> blowup_step;
};

struct SearchResult {
  RegWeights best;
  double alpha = 10.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<Evaluation> log;
};

class NoFeasiblePointError : public Error {
 public:
  NoFeasiblePointError(const std::string& what, std::vector<Evaluation> log) : Error(what), log_(std::move(log)) {}
  const std::vector<Evaluation>& log() const noexcept { return log_; }

 private:
  std::vector<Evaluation> log_;
};

/// Worker count from BOPINF_WORKERS, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("BOPINF_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on a pool of `workers` threads.
template <typename F>
void parallel_for(Index n, unsigned workers, F&& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<Index>(n, 1))));
  if (workers == 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        if (failed) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Scores one candidate: infer, integrate over the training window, check
/// bounded growth, then average the tracked relative errors.
inline Evaluation evaluate_candidate(const TrainingBundle& b, const RegWeights& w, double alpha, Objective objective) {
  Evaluation e;
  e.weights = w;
  e.alpha = alpha;
  const auto inf = infer(b.method, b.fd_states, b.derivatives, b.r_s, b.mask, w);
  const auto traj = integrate_rom(inf.ops, b.states.col(0), b.dt, b.states.cols());
  if (traj.blew_up()) {
    e.blowup_step = traj.blowup_step;
    return e;
  }
  if (!bounded_growth_check(b.states, traj.states, alpha).pass) return e;
  double obj = 0.0;
  if (objective == Objective::full_state) {
    obj = (traj.states - b.states).norm() / b.states.norm();
  } else {
    for (std::size_t i = 0; i < b.tracked.size(); ++i)
      obj += relative_rmse(b.truth[i], b.tracked[i].evaluate(traj.states));
    obj /= static_cast<double>(b.tracked.size());
  }
  if (!std::isfinite(obj)) return e;
  e.feasible = true;
  e.objective = obj;
  return e;
}

namespace detail {

// Lowest objective, then lexicographically smallest weights, then smallest alpha.
inline bool better(const Evaluation& a, const Evaluation& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  if (a.weights != b.weights) return a.weights < b.weights;
  return a.alpha < b.alpha;
}

inline std::optional<std::size_t> best_of(const std::vector<Evaluation>& log, std::size_t from = 0) {
  std::optional<std::size_t> best;
  for (std::size_t i = from; i < log.size(); ++i) {
    if (!log[i].feasible) continue;
    if (!best || better(log[i], log[*best])) best = i;
  }
  return best;
}

inline Axis refine_axis(const Axis& a, double center, double decades, Index count) {
  if (a.count == 1 || center == 0.0) return Axis{center, center, 1, Spacing::linear};
  const double f = std::pow(10.0, decades);
  const double lo = std::max(a.lo, center / f);
  const double hi = std::min(a.hi, center * f);
  if (!(hi > lo)) return Axis{center, center, 1, Spacing::linear};
  return Axis{lo, hi, std::max<Index>(count, 2), Spacing::linear, center};
}

}  // namespace detail

/// Product grid over three axes, index order (axis 0 slowest).
inline std::vector<RegWeights> product_grid(const std::array<Axis, 3>& axes) {
  const auto v0 = axes[0].values(), v1 = axes[1].values(), v2 = axes[2].values();
  std::vector<RegWeights> out;
  out.reserve(v0.size() * v1.size() * v2.size());
  for (double a : v0)
    for (double b : v1)
      for (double c : v2) out.push_back(RegWeights{{a, b, c}});
  return out;
}

inline SearchResult grid_search(const TrainingBundle& bundle, const GridSpec& spec) {
  bundle.validate();
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const unsigned workers = worker_count();
  std::vector<Evaluation> log;

  auto run_stage = [&](const std::vector<RegWeights>& grid, double alpha, int stage) {
    std::vector<Evaluation> out(grid.size());
    parallel_for(static_cast<Index>(grid.size()), workers, [&](Index i) {
      const auto k = static_cast<std::size_t>(i);
      if (spec.time_budget_seconds > 0.0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > spec.time_budget_seconds) {
        out[k].stage = stage;
        out[k].weights = grid[k];
        out[k].alpha = alpha;
        out[k].status = EvalStatus::skipped;
        return;
      }
      out[k] = evaluate_candidate(bundle, grid[k], alpha, spec.objective);
      out[k].stage = stage;
    });
    log.insert(log.end(), out.begin(), out.end());
  };

  const std::vector<double> alphas = spec.alpha_sweep.empty() ? std::vector<double>{spec.alpha} : spec.alpha_sweep;
  for (double alpha : alphas) {
    const std::size_t first = log.size();
    run_stage(product_grid(spec.axes), alpha, 1);
    const auto incumbent = detail::best_of(log, first);
    if (spec.refine && incumbent) {
      const auto w = log[*incumbent].weights;
      std::array<Axis, 3> axes;
      for (std::size_t a = 0; a < 3; ++a)
        axes[a] = detail::refine_axis(spec.axes[a], w.gamma[a], spec.refine_decades,
                                      spec.refine_count > 0 ? spec.refine_count : spec.axes[a].count);
      run_stage(product_grid(axes), alpha, 2);
    }
  }

  const auto best = detail::best_of(log);
  if (!best) throw NoFeasiblePointError("grid search found no feasible regularization", std::move(log));
  SearchResult res;
  res.best = log[*best].weights;
  res.alpha = log[*best].alpha;
  res.objective = log[*best].objective;
  res.log = std::move(log);
  return res;
}

inline csv::Table search_log_csv(const std::vector<Evaluation>& log, Method method) {
  const bool mono = method == Method::monolithic;
  csv::Table t({"stage", mono ? "gamma_c" : "gamma_s_linear", mono ? "gamma_A" : "gamma_f_linear",
                mono ? "gamma_H" : "gamma_f_quadratic", "alpha", "objective", "feasible", "blow_up_step", "status"});
  for (const auto& e : log) {
    t.add_row({std::to_string(e.stage), csv::fmt(e.weights.gamma[0]), csv::fmt(e.weights.gamma[1]),
               csv::fmt(e.weights.gamma[2]), csv::fmt(e.alpha), e.feasible ? csv::fmt(e.objective) : "",
               e.feasible ? "1" : "0", e.blowup_step ? std::to_string(*e.blowup_step) : "",
               e.status == EvalStatus::skipped ? "skipped" : "evaluated"});
  }
  return t;
}

}  // namespace bopinf
