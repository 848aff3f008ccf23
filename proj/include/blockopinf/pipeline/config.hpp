#pragma once

// Sectioned key-value pipeline configuration with strict key checking.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blockopinf/error.hpp"
#include "blockopinf/flutter.hpp"
#include "blockopinf/fomsim.hpp"
#include "blockopinf/opinf.hpp"
#include "blockopinf/regsearch.hpp"
#include "blockopinf/snapshots.hpp"

namespace bopinf::pipeline {

struct RunSection {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string condition_id = "synthetic";
};

struct PreprocessSection {
  ShiftMode shift = ShiftMode::group_scalar;
  bool scale_structure = true;
  bool tolerate_constant = false;
};

struct PodSection {
  bool structural_identity = true;
  Index r_s = 0;  // 0: full structural dimension
  Index r_f = 8;  // 0: choose by energy
  double energy = 0.9999;
};

struct TrainSection {
  std::vector<Method> methods{Method::block, Method::monolithic};
  std::string mask = "agard";
  Index k_train = 300;
  bool search = true;
  RegWeights block_weights{};
  RegWeights monolithic_weights{};
  bool exact_derivatives = false;
  bool strict = false;
};

struct RegsearchSection {
  GridSpec grid{};
  std::vector<std::string> qois{"cl", "gdisp_1", "gdisp_2"};
};

struct PredictSection {
  Index steps = 0;  // 0: same as fom.steps
};

struct EvaluateSection {
  std::vector<std::string> qois{"cl", "gdisp_1", "gdisp_2"};
  Index window_start = -1;  // -1: k_train
  Index window_end = -1;    // -1: last predicted column
};

struct CompareSection {
  Index reps = 50;
  Index calls = 2000;
};

struct FlutterSection {
  flutter::Constants constants{};
  std::string conditions;  // CSV with mach,q_inf,rho columns; relative to the config file
};

struct PipelineConfig {
  RunSection run;
  FomConfig fom;
  bool fom_seed_set = false;
  double fluid_perturbation = 0.0;
  PreprocessSection preprocess;
  PodSection pod;
  TrainSection train;
  RegsearchSection regsearch;
  PredictSection predict;
  EvaluateSection evaluate;
  CompareSection compare;
  FlutterSection flutter;
  std::filesystem::path base_dir = ".";

  Index predict_steps() const { return predict.steps > 0 ? predict.steps : fom.steps; }
  std::uint64_t fom_seed() const { return fom_seed_set ? fom.seed : run.seed; }

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  void validate() const {
    fom.validate();
    if (train.k_train < 2 * kFdHalfWidth + 1) throw ConfigError("train.k_train must be at least 7");
    if (train.k_train > fom.steps + 1) throw ConfigError("train.k_train exceeds the simulated snapshot count");
    if (train.methods.empty()) throw ConfigError("train.methods must list at least one method");
    StructureMask::from_preset(train.mask);
    train.block_weights.validate();
    train.monolithic_weights.validate();
    regsearch.grid.validate();
    if (pod.r_f < 0 || pod.r_s < 0) throw ConfigError("pod ranks must be nonnegative");
    if (!(pod.energy > 0.0 && pod.energy <= 1.0)) throw ConfigError("pod.energy must lie in (0, 1]");
    if (!pod.structural_identity && pod.r_s == 0) throw ConfigError("pod.r_s is required for a POD structural basis");
    if (predict_steps() < 1) throw ConfigError("predict.steps must be positive");
    if (compare.reps < 1 || compare.calls < 1) throw ConfigError("compare.reps and compare.calls must be positive");
    if (fluid_perturbation < 0.0) throw ConfigError("fom.fluid_perturbation must be nonnegative");
    flutter.constants.validate();
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string raw(const std::string& key) const { return trim(tree_->get<std::string>(key)); }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    out = parse<T>(key, raw(key));
  }

  template <typename T>
  T parse(const std::string& key, const std::string& text) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw bad(key, text, "a boolean");
    } else if constexpr (std::is_floating_point_v<T>) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(text, &pos);
      } catch (const std::exception&) {
        throw bad(key, text, "a number");
      }
      if (pos != text.size() || !std::isfinite(v)) throw bad(key, text, "a finite number");
      return static_cast<T>(v);
    } else {
      T v{};
      const auto* first = text.data();
      const auto* last = text.data() + text.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) throw bad(key, text, "an integer");
      return v;
    }
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(raw(key))) out.push_back(parse<double>(key, item));
    return out;
  }

 private:
  ConfigError bad(const std::string& key, const std::string& text, const char* what) const {
    return ConfigError("config key " + name_ + "." + key + " = '" + text + "' is not " + what);
  }

  std::string name_;
  const boost::property_tree::ptree* tree_;
};

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"seed", "out_dir", "condition_id"}},
      {"fom",
       {"m", "n_f", "nu", "kappa_f", "kappa_s", "dt", "steps", "seed", "gvel_perturbation", "gdisp_perturbation",
        "fluid_perturbation", "frequencies", "damping", "quadratic_scale"}},
      {"preprocess", {"shift", "scale_structure", "tolerate_constant"}},
      {"pod", {"structural_basis", "r_s", "r_f", "energy"}},
      {"train",
       {"methods", "mask", "k_train", "regularization", "gamma_s_linear", "gamma_f_linear", "gamma_f_quadratic",
        "gamma_c", "gamma_A", "gamma_H", "derivatives", "strict"}},
      {"regsearch",
       {"lo", "hi", "count", "spacing", "alpha", "alpha_sweep", "refine", "refine_decades", "refine_count",
        "time_budget", "objective", "qois"}},
      {"predict", {"steps"}},
      {"evaluate", {"qois", "window_start", "window_end"}},
      {"compare", {"reps", "calls"}},
      {"flutter", {"L", "L_nondim", "f_char", "N", "gamma", "R", "C", "T_ref", "mu_ref", "conditions"}},
  };
  return keys;
}

}  // namespace detail

inline PipelineConfig parse_config(const boost::property_tree::ptree& tree,
                                   const std::filesystem::path& base_dir = ".") {
  using detail::Section;
  const auto& known = detail::known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) {
      if (body.empty()) throw ConfigError("config key '" + section + "' lies outside any section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
  }
  auto section = [&tree](const std::string& name) {
    const auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  PipelineConfig c;
  c.base_dir = base_dir;

  const auto run = section("run");
  run.read("seed", c.run.seed);
  run.read("out_dir", c.run.out_dir);
  run.read("condition_id", c.run.condition_id);

  const auto fom = section("fom");
  fom.read("m", c.fom.m);
  fom.read("n_f", c.fom.n_f);
  fom.read("nu", c.fom.nu);
  fom.read("kappa_f", c.fom.kappa_f);
  fom.read("kappa_s", c.fom.kappa_s);
  fom.read("dt", c.fom.dt);
  fom.read("steps", c.fom.steps);
  if (fom.has("seed")) {
    fom.read("seed", c.fom.seed);
    c.fom_seed_set = true;
  }
  fom.read("gvel_perturbation", c.fom.gvel_perturbation);
  fom.read("gdisp_perturbation", c.fom.gdisp_perturbation);
  fom.read("fluid_perturbation", c.fluid_perturbation);
  fom.read("quadratic_scale", c.fom.quadratic_scale);
  if (fom.has("frequencies")) c.fom.frequencies_hz = fom.list("frequencies");
  if (fom.has("damping")) c.fom.damping = fom.list("damping");

  const auto pre = section("preprocess");
  if (pre.has("shift")) {
    const auto v = pre.raw("shift");
    if (v == "group") c.preprocess.shift = ShiftMode::group_scalar;
    else if (v == "row") c.preprocess.shift = ShiftMode::row_mean;
    else throw ConfigError("preprocess.shift must be group or row, got '" + v + "'");
  }
  pre.read("scale_structure", c.preprocess.scale_structure);
  pre.read("tolerate_constant", c.preprocess.tolerate_constant);

  const auto pod = section("pod");
  if (pod.has("structural_basis")) {
    const auto v = pod.raw("structural_basis");
    if (v == "identity") c.pod.structural_identity = true;
    else if (v == "pod") c.pod.structural_identity = false;
    else throw ConfigError("pod.structural_basis must be identity or pod, got '" + v + "'");
  }
  pod.read("r_s", c.pod.r_s);
  pod.read("r_f", c.pod.r_f);
  pod.read("energy", c.pod.energy);

  const auto train = section("train");
  if (train.has("methods")) {
    c.train.methods.clear();
    for (const auto& m : detail::split_list(train.raw("methods"))) c.train.methods.push_back(method_from_name(m));
  }
  train.read("mask", c.train.mask);
  train.read("k_train", c.train.k_train);
  if (train.has("regularization")) {
    const auto v = train.raw("regularization");
    if (v == "search") c.train.search = true;
    else if (v == "fixed") c.train.search = false;
    else throw ConfigError("train.regularization must be search or fixed, got '" + v + "'");
  }
  train.read("gamma_s_linear", c.train.block_weights.gamma[0]);
  train.read("gamma_f_linear", c.train.block_weights.gamma[1]);
  train.read("gamma_f_quadratic", c.train.block_weights.gamma[2]);
  train.read("gamma_c", c.train.monolithic_weights.gamma[0]);
  train.read("gamma_A", c.train.monolithic_weights.gamma[1]);
  train.read("gamma_H", c.train.monolithic_weights.gamma[2]);
  if (train.has("derivatives")) {
    const auto v = train.raw("derivatives");
    if (v == "fd") c.train.exact_derivatives = false;
    else if (v == "exact") c.train.exact_derivatives = true;
    else throw ConfigError("train.derivatives must be fd or exact, got '" + v + "'");
  }
  train.read("strict", c.train.strict);

  const auto rs = section("regsearch");
  Axis axis;
  rs.read("lo", axis.lo);
  rs.read("hi", axis.hi);
  rs.read("count", axis.count);
  if (rs.has("spacing")) {
    const auto v = rs.raw("spacing");
    if (v == "log") axis.spacing = Spacing::log;
    else if (v == "linear") axis.spacing = Spacing::linear;
    else throw ConfigError("regsearch.spacing must be log or linear, got '" + v + "'");
  }
  if (axis.lo == axis.hi) axis.count = 1;
  c.regsearch.grid.axes = {axis, axis, axis};
  rs.read("alpha", c.regsearch.grid.alpha);
  if (rs.has("alpha_sweep")) c.regsearch.grid.alpha_sweep = rs.list("alpha_sweep");
  rs.read("refine", c.regsearch.grid.refine);
  rs.read("refine_decades", c.regsearch.grid.refine_decades);
  rs.read("refine_count", c.regsearch.grid.refine_count);
  rs.read("time_budget", c.regsearch.grid.time_budget_seconds);
  if (rs.has("objective")) {
    const auto v = rs.raw("objective");
    if (v == "qoi") c.regsearch.grid.objective = Objective::tracked_qoi;
    else if (v == "full_state") c.regsearch.grid.objective = Objective::full_state;
    else throw ConfigError("regsearch.objective must be qoi or full_state, got '" + v + "'");
  }
  if (rs.has("qois")) c.regsearch.qois = detail::split_list(rs.raw("qois"));

  section("predict").read("steps", c.predict.steps);

  const auto ev = section("evaluate");
  if (ev.has("qois")) c.evaluate.qois = detail::split_list(ev.raw("qois"));
  ev.read("window_start", c.evaluate.window_start);
  ev.read("window_end", c.evaluate.window_end);

  const auto cmp = section("compare");
  cmp.read("reps", c.compare.reps);
  cmp.read("calls", c.compare.calls);

  const auto fl = section("flutter");
  fl.read("L", c.flutter.constants.L);
  fl.read("L_nondim", c.flutter.constants.L_nondim);
  fl.read("f_char", c.flutter.constants.f_char);
  fl.read("N", c.flutter.constants.N);
  fl.read("gamma", c.flutter.constants.gamma);
  fl.read("R", c.flutter.constants.R);
  fl.read("C", c.flutter.constants.C);
  fl.read("T_ref", c.flutter.constants.T_ref);
  fl.read("mu_ref", c.flutter.constants.mu_ref);
  fl.read("conditions", c.flutter.conditions);

  c.validate();
  return c;
}

inline PipelineConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".") {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return parse_config(tree, base_dir);
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(tree, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace bopinf::pipeline
