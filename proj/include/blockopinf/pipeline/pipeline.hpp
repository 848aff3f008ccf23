#pragma once

// Stage-by-stage pipeline over an output directory: simulate, preprocess,
// pod, search, train, predict, evaluate, compare, count, flutter.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockopinf/blockopinf.hpp"
#include "blockopinf/pipeline/config.hpp"

namespace bopinf::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// A stage needs an artifact that an earlier stage has not produced.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

enum class Stage { simulate, preprocess, pod, search, train, predict, evaluate, compare, count, flutter };

inline constexpr std::array<Stage, 10> kAllStages{Stage::simulate, Stage::preprocess, Stage::pod,     Stage::search,
                                                  Stage::train,    Stage::predict,    Stage::evaluate, Stage::compare,
                                                  Stage::count,    Stage::flutter};

/// Stages run by `run` when none are named. `compare` writes wall-clock timings and is opt-in.
inline constexpr std::array<Stage, 9> kDefaultStages{Stage::simulate, Stage::preprocess, Stage::pod,
                                                     Stage::search,   Stage::train,      Stage::predict,
                                                     Stage::evaluate, Stage::count,      Stage::flutter};

inline std::string stage_name(Stage s) {
  static constexpr const char* names[] = {"simulate", "preprocess", "pod",     "search", "train",
                                          "predict",  "evaluate",   "compare", "count",  "flutter"};
  return names[static_cast<int>(s)];
}

inline Stage stage_from_name(const std::string& s) {
  for (auto st : kAllStages)
    if (stage_name(st) == s) return st;
  throw ConfigError("unknown stage '" + s + "'");
}

/// Parses a comma-separated list and returns it in dependency order without duplicates.
inline std::vector<Stage> parse_stages(const std::string& list) {
  std::vector<Stage> out;
  for (const auto& name : detail::split_list(list)) {
    const Stage s = stage_from_name(name);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInputError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + p.string() + "' for writing");
  out << text;
}

struct ManifestEntry {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Every regular file in `dir` except the manifest, sorted by name.
inline std::vector<ManifestEntry> build_manifest(const fs::path& dir) {
  std::vector<ManifestEntry> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == kManifestName) continue;
    out.push_back({e.path().filename().string(), sha256_hex(read_file(e.path())), e.file_size()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

inline json manifest_json(const std::vector<ManifestEntry>& entries) {
  json files = json::array();
  for (const auto& e : entries) files.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  return json{{"files", files}};
}

inline json preprocessor_to_json(const Preprocessor& p) {
  json groups = json::array();
  for (const auto& g : p.groups()) {
    groups.push_back({{"name", g.name},
                      {"size", g.size},
                      {"passthrough", g.passthrough},
                      {"shift", std::vector<double>(g.shift.data(), g.shift.data() + g.shift.size())},
                      {"gain", g.gain},
                      {"offset", g.offset},
                      {"target", {g.target.lo, g.target.hi}}});
  }
  return json{{"shift_mode", p.mode() == ShiftMode::group_scalar ? "group" : "row"}, {"groups", groups}};
}

inline Preprocessor preprocessor_from_json(const json& j) {
  try {
    std::vector<VariableGroup> layout;
    std::vector<GroupTransform> groups;
    for (const auto& g : j.at("groups")) {
      GroupTransform t;
      t.name = g.at("name").get<std::string>();
      t.size = g.at("size").get<Index>();
      t.passthrough = g.at("passthrough").get<bool>();
      const auto shift = g.at("shift").get<std::vector<double>>();
      t.shift = Eigen::Map<const VectorXd>(shift.data(), static_cast<Index>(shift.size()));
      t.gain = g.at("gain").get<double>();
      t.offset = g.at("offset").get<double>();
      const auto target = g.at("target").get<std::array<double, 2>>();
      t.target = Range{target[0], target[1]};
      layout.push_back({t.name, t.size});
      groups.push_back(std::move(t));
    }
    const auto mode = j.at("shift_mode").get<std::string>() == "row" ? ShiftMode::row_mean : ShiftMode::group_scalar;
    return Preprocessor(VariableLayout(std::move(layout)), mode, std::move(groups));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed preprocessor file: ") + e.what(), 0);
  }
}

/// Data shared by the search and train stages.
struct TrainingData {
  SnapshotSet snapshots;
  Preprocessor preprocessor;
  CoupledBasis basis;
  TrainingBundle bundle;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::ostream& log = std::cerr) : cfg_(std::move(cfg)), log_(&log) {
    out_ = cfg_.run.out_dir;
  }

  const PipelineConfig& config() const noexcept { return cfg_; }
  const fs::path& out_dir() const noexcept { return out_; }
  fs::path artifact(const std::string& name) const { return out_ / name; }

  /// Runs the stages in order and rewrites the manifest.
  std::vector<ManifestEntry> run(const std::vector<Stage>& stages) {
    fs::create_directories(out_);
    for (auto s : stages) {
      *log_ << "[" << stage_name(s) << "]\n";
      run_stage(s);
    }
    auto entries = build_manifest(out_);
    write_text(artifact(kManifestName), manifest_json(entries).dump(2) + "\n");
    return entries;
  }

  void run_stage(Stage s) {
    switch (s) {
      case Stage::simulate: simulate(); break;
      case Stage::preprocess: preprocess(); break;
      case Stage::pod: pod(); break;
      case Stage::search: search(); break;
      case Stage::train: train(); break;
      case Stage::predict: predict(); break;
      case Stage::evaluate: evaluate(); break;
      case Stage::compare: compare(); break;
      case Stage::count: count(); break;
      case Stage::flutter: flutter(); break;
    }
  }

  CoupledFom build_fom() const { return build_synthetic_fom(cfg_.fom); }

  VectorXd initial_state(const CoupledFom& fom) const {
    VectorXd q0 = fom.initial_state(cfg_.fom.gvel_perturbation, cfg_.fom.gdisp_perturbation);
    if (cfg_.fluid_perturbation > 0.0)
      q0.tail(fom.n_f()) += random_initial_state(fom.n_f(), cfg_.fluid_perturbation, cfg_.fom_seed());
    return q0;
  }

  void simulate() {
    const auto fom = build_fom();
    const auto S = integrate_fom(fom, initial_state(fom), cfg_.fom.dt, cfg_.fom.steps + 1);
    write_snapshots(S, artifact("fom_snapshots.opif").string());
    std::vector<QoiSeries> series{{"cl", fom.qoi_series(S.data()), S.dt(), S.t0()}};
    for (Index i = 0; i < fom.m(); ++i)
      series.push_back({"gdisp_" + std::to_string(i + 1), S.data().row(i).transpose(), S.dt(), S.t0()});
    for (Index i = 0; i < fom.m(); ++i)
      series.push_back({"gvel_" + std::to_string(i + 1), S.data().row(fom.m() + i).transpose(), S.dt(), S.t0()});
    qoi_csv(series).save(artifact("fom_qoi.csv").string());
    *log_ << "  " << S.cols() << " snapshots of dimension " << S.rows() << "\n";
  }

  void preprocess() {
    const auto S = read_snapshots(require("fom_snapshots.opif"));
    const auto train = S.columns(0, cfg_.train.k_train);
    std::set<std::string> passthrough;
    if (!cfg_.preprocess.scale_structure) passthrough = {kGdispGroup, kGvelGroup};
    const auto pre = fit_shift_scale(train, default_targets(train.layout(), passthrough),
                                     PreprocessOptions{cfg_.preprocess.shift, cfg_.preprocess.tolerate_constant});
    write_text(artifact("preprocessor.json"), preprocessor_to_json(pre).dump(2) + "\n");
    write_snapshots(pre.apply(train), artifact("train_preprocessed.opif").string());
  }

  void pod() {
    const auto T = read_snapshots(require("train_preprocessed.opif"));
    const auto fom = build_fom();
    const auto data = T.data();
    const auto fluid = compute_pod(data.bottomRows(fom.n_f()));
    spectrum_csv(fluid.singular_values).save(artifact("spectrum_fluid.csv").string());
    Index r_f = cfg_.pod.r_f > 0 ? cfg_.pod.r_f : select_rank(fluid.singular_values, cfg_.pod.energy);
    const Index avail_f = numerical_rank(fluid.singular_values);
    if (r_f > avail_f)
      throw ConfigError("pod.r_f = " + std::to_string(r_f) + " exceeds the available fluid snapshot rank " +
                        std::to_string(avail_f));
    ReducedBasis structural = ReducedBasis::identity(fom.n_s());
    if (cfg_.pod.r_s > fom.n_s()) throw ConfigError("pod.r_s exceeds the structural dimension");
    if (!cfg_.pod.structural_identity) {
      const auto s = compute_pod(data.topRows(fom.n_s()));
      spectrum_csv(s.singular_values).save(artifact("spectrum_structural.csv").string());
      if (cfg_.pod.r_s > numerical_rank(s.singular_values))
        throw ConfigError("pod.r_s exceeds the available structural snapshot rank");
      structural = s.truncated(cfg_.pod.r_s);
    } else if (cfg_.pod.r_s > 0 && cfg_.pod.r_s != fom.n_s()) {
      throw ConfigError("an identity structural basis requires pod.r_s = 0 or the structural dimension");
    }
    write_basis(CoupledBasis{structural, fluid.truncated(r_f)}, artifact("basis.opib").string());
    *log_ << "  r_s = " << structural.rank() << ", r_f = " << r_f << "\n";
  }

  /// Functional and physical truth series of a named QoI.
  std::pair<QoiFunctional, VectorXd> qoi(const std::string& name, const CoupledFom& fom, const SnapshotSet& S,
                                         const CoupledBasis& basis, const Preprocessor& pre) const {
    if (name == "cl") return {pullback_functional(name, fom.qoi_full_weights(), basis, &pre), fom.qoi_series(S.data())};
    for (const char* prefix : {"gdisp_", "gvel_"}) {
      const std::string p(prefix);
      if (name.rfind(p, 0) != 0) continue;
      Index i = 0;
      const auto tail = name.substr(p.size());
      const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), i);
      if (ec != std::errc{} || ptr != tail.data() + tail.size() || i < 1 || i > fom.m())
        throw ConfigError("unknown quantity of interest '" + name + "'");
      const Index row = (p == "gdisp_" ? 0 : fom.m()) + i - 1;
      return {structural_functional(name, row, basis, &pre), S.data().row(row).transpose()};
    }
    throw ConfigError("unknown quantity of interest '" + name + "'");
  }

  TrainingData training_data(Method method) const {
    const auto S = read_snapshots(require("fom_snapshots.opif"));
    const auto pre = preprocessor_from_json(json::parse(read_file(require("preprocessor.json"))));
    const auto basis = read_basis(require("basis.opib"));
    const auto fom = build_fom();
    const Index k = cfg_.train.k_train;
    if (S.cols() < k) throw ConfigError("train.k_train exceeds the stored snapshot count");
    if (basis.n_s() != fom.n_s() || basis.n_f() != fom.n_f())
      throw ConfigError("stored basis does not match the configured model dimensions");
    const MatrixXd X = S.data().leftCols(k);
    const MatrixXd Qh = basis.project(pre.apply(X));

    TrainingBundle b;
    b.method = method;
    b.mask = StructureMask::from_preset(cfg_.train.mask);
    b.r_s = basis.r_s();
    b.states = Qh;
    b.dt = S.dt();
    if (cfg_.train.exact_derivatives) {
      const MatrixXd F = fom_derivatives(fom, X);
      b.fd_states = Qh;
      b.derivatives = basis.project(pre.row_gain().asDiagonal() * F);
    } else {
      auto fd = fd_time_derivative(Qh, S.dt());
      b.fd_states = Qh.middleCols(fd.first_column, fd.count());
      b.derivatives = std::move(fd.derivative);
    }
    for (const auto& name : cfg_.regsearch.qois) {
      auto [f, truth] = qoi(name, fom, S, basis, pre);
      b.tracked.push_back(std::move(f));
      b.truth.push_back(truth.head(k));
    }
    return TrainingData{S, pre, basis, std::move(b)};
  }

  void search() {
    if (!cfg_.train.search) {
      *log_ << "  fixed regularization configured; nothing to search\n";
      return;
    }
    for (auto m : cfg_.train.methods) {
      const auto data = training_data(m);
      const auto name = method_name(m);
      try {
        const auto res = grid_search(data.bundle, cfg_.regsearch.grid);
        search_log_csv(res.log, m).save(artifact("search_" + name + ".csv").string());
        write_text(artifact("regularization_" + name + ".json"),
                   json{{"method", name}, {"gamma", res.best.gamma}, {"alpha", res.alpha}, {"objective", res.objective}}
                           .dump(2) +
                       "\n");
        *log_ << "  " << name << ": gamma = (" << res.best.gamma[0] << ", " << res.best.gamma[1] << ", "
              << res.best.gamma[2] << "), objective " << res.objective << "\n";
      } catch (const NoFeasiblePointError& e) {
        search_log_csv(e.log(), m).save(artifact("search_" + name + ".csv").string());
        throw;
      }
    }
  }

  RegWeights weights_for(Method m) const {
    if (!cfg_.train.search) return m == Method::block ? cfg_.train.block_weights : cfg_.train.monolithic_weights;
    const auto j = json::parse(read_file(require("regularization_" + method_name(m) + ".json")));
    return RegWeights{j.at("gamma").get<std::array<double, 3>>()};
  }

  void train() {
    for (auto m : cfg_.train.methods) {
      const auto w = weights_for(m);
      const auto data = training_data(m);
      const auto& b = data.bundle;
      const auto res = infer(m, b.fd_states, b.derivatives, b.r_s, b.mask, w);
      const bool unregularized = w.gamma == std::array<double, 3>{0.0, 0.0, 0.0};
      if (cfg_.train.strict && res.rank_deficient && unregularized)
        throw NumericError("rank-deficient data matrix with zero regularization (" + method_name(m) + ")");
      const auto name = method_name(m);
      write_operators(res.ops, artifact("operators_" + name + ".opio").string());
      write_text(artifact("train_" + name + ".json"),
                 json{{"method", name},
                      {"gamma", w.gamma},
                      {"r_s", res.ops.r_s()},
                      {"r_f", res.ops.r_f()},
                      {"parameters", count_parameters(m, res.ops.r_s(), res.ops.r_f(), b.mask)},
                      {"ranks", res.ranks},
                      {"unknowns", res.unknowns},
                      {"rank_deficient", res.rank_deficient}}
                         .dump(2) +
                     "\n");
      if (res.rank_deficient) *log_ << "  warning: " << name << " data matrix is rank deficient\n";
    }
  }

  RomTrajectory predict_trajectory(const OperatorSet& ops, const SnapshotSet& S, const Preprocessor& pre,
                                   const CoupledBasis& basis) const {
    const VectorXd q0 = basis.project(pre.apply(S.data().col(0)));
    return integrate_rom(ops, q0, S.dt(), cfg_.predict_steps() + 1, S.t0());
  }

  void predict() {
    const auto S = read_snapshots(require("fom_snapshots.opif"));
    const auto pre = preprocessor_from_json(json::parse(read_file(require("preprocessor.json"))));
    const auto basis = read_basis(require("basis.opib"));
    const auto fom = build_fom();
    for (auto m : cfg_.train.methods) {
      const auto name = method_name(m);
      const auto ops = read_operators(require("operators_" + name + ".opio"));
      const auto traj = predict_trajectory(ops, S, pre, basis);
      if (traj.blew_up())
        throw BlowUpError(name + " model diverged at step " + std::to_string(*traj.blowup_step),
                          static_cast<long>(*traj.blowup_step));
      const VariableLayout layout({{"q_s", basis.r_s()}, {"q_f", basis.r_f()}});
      write_snapshots(SnapshotSet(traj.states, traj.dt, layout, traj.t0),
                      artifact("rom_states_" + name + ".opif").string());
      std::vector<QoiSeries> series;
      for (const auto& q : cfg_.evaluate.qois) series.push_back(extract_qoi(traj, qoi(q, fom, S, basis, pre).first));
      qoi_csv(series).save(artifact("prediction_" + name + ".csv").string());
    }
  }

  struct ErrorRow {
    Method method;
    std::string qoi;
    double eps = 0.0;
  };

  std::vector<ErrorRow> errors(const std::vector<Method>& methods) const {
    const auto S = read_snapshots(require("fom_snapshots.opif"));
    const auto pre = preprocessor_from_json(json::parse(read_file(require("preprocessor.json"))));
    const auto basis = read_basis(require("basis.opib"));
    const auto fom = build_fom();
    std::vector<ErrorRow> rows;
    for (auto m : methods) {
      const auto states = read_snapshots(require("rom_states_" + method_name(m) + ".opif"));
      const Index last_available = std::min(states.cols(), S.cols()) - 1;
      Window w{cfg_.evaluate.window_start >= 0 ? cfg_.evaluate.window_start : cfg_.train.k_train,
               cfg_.evaluate.window_end >= 0 ? cfg_.evaluate.window_end : last_available};
      if (w.last > last_available || w.first > w.last)
        throw ConfigError("evaluate window [" + std::to_string(w.first) + ", " + std::to_string(w.last) +
                          "] lies outside the predicted horizon");
      for (const auto& q : cfg_.evaluate.qois) {
        const auto [f, truth] = qoi(q, fom, S, basis, pre);
        rows.push_back({m, q, relative_rmse(truth, f.evaluate(states.data()), w)});
      }
    }
    return rows;
  }

  void evaluate() {
    const auto basis = read_basis(require("basis.opib"));
    csv::Table t({"condition_id", "r_f", "method", "qoi", "eps_rel"});
    for (const auto& r : errors(cfg_.train.methods)) {
      t.add_row({cfg_.run.condition_id, std::to_string(basis.r_f()), method_name(r.method), r.qoi, csv::fmt(r.eps)});
      *log_ << "  " << method_name(r.method) << " " << r.qoi << ": eps_rel = " << r.eps << "\n";
    }
    t.save(artifact("errors.csv").string());
  }

  void compare() {
    const std::vector<Method> both{Method::block, Method::monolithic};
    for (auto m : both) {
      require("operators_" + method_name(m) + ".opio");
      require("rom_states_" + method_name(m) + ".opif");
    }
    const auto basis = read_basis(require("basis.opib"));
    const auto mask = StructureMask::from_preset(cfg_.train.mask);
    csv::Table cmp({"qoi", "method", "eps_rel", "parameters"});
    const auto rows = errors(both);
    for (const auto& q : cfg_.evaluate.qois)
      for (const auto& r : rows)
        if (r.qoi == q)
          cmp.add_row({q, method_name(r.method), csv::fmt(r.eps),
                       std::to_string(count_parameters(r.method, basis.r_s(), basis.r_f(), mask))});
    cmp.save(artifact("compare.csv").string());

    csv::Table timing({"method", "r_s", "r_f", "reps", "calls_per_rep", "median_ns", "p25_ns", "p75_ns"});
    for (auto m : both) {
      const auto ops = read_operators(require("operators_" + method_name(m) + ".opio"));
      const auto states = read_snapshots(require("rom_states_" + method_name(m) + ".opif"));
      const auto t = time_rhs(ops, states.data(), cfg_.compare.reps, cfg_.compare.calls);
      timing.add_row({method_name(m), std::to_string(ops.r_s()), std::to_string(ops.r_f()), std::to_string(t.reps),
                      std::to_string(t.calls_per_rep), csv::fmt(t.median_ns), csv::fmt(t.p25_ns), csv::fmt(t.p75_ns)});
      *log_ << "  " << method_name(m) << ": median " << t.median_ns << " ns per right-hand side\n";
    }
    timing.save(artifact("timing.csv").string());
  }

  void count() {
    const auto fom = build_fom();
    const Index r_s = cfg_.pod.structural_identity ? fom.n_s() : cfg_.pod.r_s;
    const auto mask = StructureMask::from_preset(cfg_.train.mask);
    csv::Table t({"r_s", "r_f", "monolithic", "block"});
    for (Index r_f = 1; r_f <= 32; ++r_f)
      t.add_row({std::to_string(r_s), std::to_string(r_f),
                 std::to_string(count_parameters(Method::monolithic, r_s, r_f, mask)),
                 std::to_string(count_parameters(Method::block, r_s, r_f, mask))});
    t.save(artifact("counts.csv").string());
  }

  void flutter() {
    if (cfg_.flutter.conditions.empty()) throw ConfigError("flutter.conditions is not set");
    const auto path = cfg_.resolve(cfg_.flutter.conditions);
    if (!fs::exists(path)) throw MissingInputError("flow condition file '" + path.string() + "' not found");
    std::vector<flutter::FlowCondition> rows;
    for (const auto& in : read_flow_inputs(path))
      rows.push_back(flutter::compute_flow_condition(in[0], in[1], in[2], cfg_.flutter.constants));
    flutter::flow_table(rows).save(artifact("flow_conditions.csv").string());
    print_flow_table(rows, *log_);
  }

  /// (mach, q_inf, rho) triples from a CSV whose header names those columns.
  static std::vector<std::array<double, 3>> read_flow_inputs(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty flow condition file", 0);
    const auto header = detail::split_list(line);
    std::array<std::size_t, 3> col{};
    const std::array<std::string, 3> want{"mach", "q_inf", "rho"};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto it = std::find(header.begin(), header.end(), want[k]);
      if (it == header.end()) throw FormatError("flow condition file lacks a '" + want[k] + "' column", 0);
      col[k] = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<std::array<double, 3>> rows;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty() || line[0] == '#') continue;
      const auto cells = detail::split_list(line);
      if (cells.size() != header.size()) throw FormatError("flow condition row width differs from header", 0);
      std::array<double, 3> r{};
      for (std::size_t k = 0; k < 3; ++k) {
        try {
          r[k] = std::stod(cells[col[k]]);
        } catch (const std::exception&) {
          throw FormatError("non-numeric flow condition entry '" + cells[col[k]] + "'", 0);
        }
      }
      rows.push_back(r);
    }
    return rows;
  }

  static void print_flow_table(const std::vector<flutter::FlowCondition>& rows, std::ostream& out) {
    out << std::left << std::setw(8) << "M_inf" << std::setw(10) << "q_inf" << std::setw(12) << "u_inf" << std::setw(12)
        << "T" << std::setw(14) << "Re" << "dt_nondim\n";
    for (const auto& f : rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-8.3f%-10.4g%-12.2f%-12.2f%-14.4e%.5f\n", f.mach, f.q_inf, f.u_inf, f.T, f.Re,
                    f.dt_nondim);
      out << buf;
    }
    out << "solver parameter names:\n";
    for (const auto& [var, name] : flutter::solver_parameter_names()) out << "  " << var << " -> " << name << "\n";
  }

 private:
  std::string require(const std::string& name) const {
    const auto p = artifact(name);
    if (!fs::exists(p)) throw MissingInputError("missing stage input '" + p.string() + "'");
    return p.string();
  }

  static Index numerical_rank(const VectorXd& sigma) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double tol = sigma(0) * 1e-13 * static_cast<double>(sigma.size());
    Index r = 0;
    while (r < sigma.size() && sigma(r) > tol) ++r;
    return r;
  }

  PipelineConfig cfg_;
  std::ostream* log_;
  fs::path out_;
};

/// Process exit status for an exception escaping a stage.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const MissingInputError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e)) return 2;
  if (dynamic_cast<const NoFeasiblePointError*>(&e)) return 4;
  return 3;
}

}  // namespace bopinf::pipeline
