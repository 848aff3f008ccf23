// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blockopinf/blockopinf.hpp"
#include "blockopinf/pipeline/pipeline.hpp"

using namespace bopinf;
namespace pl = bopinf::pipeline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Half a unit in the given significant figure of ref.
double sig_tol(double ref, int figures) {
  return 0.5 * std::pow(10.0, std::floor(std::log10(std::abs(ref))) - (figures - 1));
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bopinf_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

pl::PipelineConfig default_config() {
  return pl::load_config(fs::path(BOPINF_CONFIG_DIR) / "default.ini");
}

std::vector<pl::Stage> stages_through_evaluate() {
  return {pl::Stage::simulate, pl::Stage::preprocess, pl::Stage::pod,     pl::Stage::search,
          pl::Stage::train,    pl::Stage::predict,    pl::Stage::evaluate};
}

// Published flow-condition rows: mach, q_inf, u_inf, T, Re, dt_nondim.
struct FlowRow {
  double mach, q, u, T, Re, dt;
};

const std::vector<FlowRow> kFlowRows{
    {0.901, 50, 728.37, 271.95, 1.164e6, 0.19826},  {0.901, 70, 861.82, 380.72, 1.023e6, 0.23458},
    {0.901, 90, 877.21, 489.50, 9.453e5, 0.26599},  {0.957, 50, 916.65, 381.78, 6.856e5, 0.23491},
    {0.957, 70, 1084.60, 534.49, 6.186e5, 0.27794}, {0.957, 90, 1229.82, 687.21, 5.813e5, 0.31516},
    {1.141, 50, 823.66, 216.85, 1.276e6, 0.17704},  {1.141, 70, 974.57, 303.59, 1.102e6, 0.20947},
    {1.141, 90, 1105.06, 390.33, 1.005e6, 0.23752},
};

Outcome flow_table_reproduction() {
  int bad_rows = 0;
  std::ostringstream misses;
  for (std::size_t i = 0; i < kFlowRows.size(); ++i) {
    const auto& r = kFlowRows[i];
    const auto f = flutter::compute_flow_condition(r.mach, r.q, flutter::density_from_velocity(r.q, r.u));
    const std::array<std::pair<const char*, std::pair<double, double>>, 4> cmp{
        {{"u", {f.u_inf, r.u}}, {"T", {f.T, r.T}}, {"Re", {f.Re, r.Re}}, {"dt", {f.dt_nondim, r.dt}}}};
    bool ok = true;
    for (const auto& [name, v] : cmp) {
      if (std::abs(v.first - v.second) > sig_tol(v.second, 4)) {
        ok = false;
        misses << " row" << i + 1 << "." << name << "=" << fmt("%.6g", v.first) << "(ref " << fmt("%.6g", v.second)
               << ")";
      }
    }
    if (!ok) ++bad_rows;
  }
  return {bad_rows == 0, std::to_string(9 - bad_rows) + "/9 rows within 4 significant figures" +
                             (bad_rows ? ";" + misses.str() : "")};
}

Outcome final_time() {
  const double tf = 1000.0 * flutter::dimensional_time_step();
  const bool exact = std::abs(tf - 0.24522) <= sig_tol(0.24522, 5);
  const bool paper = std::abs(tf - 0.2453) <= sig_tol(0.2453, 3);
  return {exact && paper, "t_final = " + fmt("%.8f", tf) + " s"};
}

Outcome operator_recovery() {
  const FomConfig cfg;
  const auto fom = build_synthetic_fom(cfg);
  const auto pilot = integrate_fom(fom, random_initial_state(fom.n(), 1.0, 11), cfg.dt, 601);
  const CoupledBasis basis{ReducedBasis::identity(fom.n_s()), compute_pod(pilot.data().bottomRows(fom.n_f())).truncated(8)};
  const Index r = basis.r_s() + basis.r_f();
  const int trajectories = 3;
  const Index columns = 300;
  MatrixXd Q(r, trajectories * columns), Qd(r, trajectories * columns);
  for (int t = 0; t < trajectories; ++t) {
    const VectorXd q0 = basis.project(random_initial_state(fom.n(), 1.0, 500 + static_cast<std::uint64_t>(t)));
    const auto traj = integrate_projected(fom, basis, q0, cfg.dt, columns);
    Q.middleCols(t * columns, columns) = traj.states;
    Qd.middleCols(t * columns, columns) = traj.derivatives;
  }
  const auto mask = StructureMask::agard_like();
  const auto oracle = intrusive_project(fom, basis);
  const auto res = infer_block(Q, Qd, basis.r_s(), mask, RegWeights::block(0, 0, 0));
  double worst = 0.0;
  std::string worst_block;
  int blocks = 0;
  for (auto b : kAllBlocks) {
    if (!mask.learns(b)) continue;
    ++blocks;
    const double e = relative_frobenius(res.ops.block(b), oracle.block(b));
    if (e >= worst) {
      worst = e;
      worst_block = block_name(b);
    }
  }
  return {!res.rank_deficient && worst <= 1e-6,
          std::to_string(blocks) + " learned blocks, worst " + worst_block + " error " + fmt("%.3e", worst) +
              (res.rank_deficient ? ", data matrix rank deficient" : ", full column rank")};
}

Outcome complexity_counts() {
  const auto mask = StructureMask::agard_like();
  const Index m88 = count_parameters(Method::monolithic, 8, 8, mask), b88 = count_parameters(Method::block, 8, 8, mask);
  const Index m812 = count_parameters(Method::monolithic, 8, 12, mask),
              b812 = count_parameters(Method::block, 8, 12, mask);
  bool smaller = true;
  for (Index rf = 1; rf <= 32; ++rf)
    smaller = smaller && count_parameters(Method::block, 8, rf, mask) < count_parameters(Method::monolithic, 8, rf, mask);
  const bool ok = m88 == 2448 && b88 == 560 && m812 == 4620 && b812 == 1356 && smaller;
  return {ok, "(8,8) " + std::to_string(m88) + "/" + std::to_string(b88) + ", (8,12) " + std::to_string(m812) + "/" +
                  std::to_string(b812) + (smaller ? ", block smaller for r_f in [1,32]" : ", block not always smaller")};
}

Outcome prediction_speedup() {
  auto cfg = default_config();
  cfg.pod.r_f = 12;
  cfg.run.out_dir = scratch("speedup").string();
  std::ostringstream log;
  pl::Pipeline p(cfg, log);
  p.run({pl::Stage::simulate, pl::Stage::preprocess, pl::Stage::pod, pl::Stage::search, pl::Stage::train,
         pl::Stage::predict});
  std::array<RhsTiming, 2> t;
  const std::array<Method, 2> methods{Method::block, Method::monolithic};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto ops = read_operators(p.artifact("operators_" + method_name(methods[i]) + ".opio").string());
    const auto states = read_snapshots(p.artifact("rom_states_" + method_name(methods[i]) + ".opif").string());
    t[i] = time_rhs(ops, states.data(), 50, 2000);
  }
  fs::remove_all(cfg.run.out_dir);
  const double reduction = 1.0 - t[0].median_ns / t[1].median_ns;
  return {reduction >= 0.10, "median ns block " + fmt("%.1f", t[0].median_ns) + " vs monolithic " +
                                 fmt("%.1f", t[1].median_ns) + ", reduction " + fmt("%.1f", 100.0 * reduction) + "%"};
}

Outcome prediction_accuracy() {
  auto cfg = default_config();
  cfg.run.out_dir = scratch("accuracy").string();
  std::ostringstream log;
  pl::Pipeline p(cfg, log);
  p.run(stages_through_evaluate());
  double block = NAN, mono = NAN;
  for (const auto& row : p.errors({Method::block, Method::monolithic}))
    if (row.qoi == "cl") (row.method == Method::block ? block : mono) = row.eps;
  fs::remove_all(cfg.run.out_dir);
  const bool grid_ok = cfg.regsearch.grid.axes[0].count == 6 && cfg.train.k_train == 300 && cfg.predict_steps() == 1000;
  return {grid_ok && std::isfinite(mono) && block <= 0.05,
          "cl eps_rel block " + fmt("%.4f", block) + " (tol 0.05), monolithic " + fmt("%.4f", mono) + " (ratio " +
              fmt("%.2f", mono / block) + ")"};
}

Outcome fd_order() {
  std::vector<double> h, err;
  for (double dt = 0.2; dt > 0.02; dt /= 2.0) {
    const Index k = static_cast<Index>(std::round(2.0 / dt)) + 1;
    MatrixXd Q(1, k);
    for (Index t = 0; t < k; ++t) Q(0, t) = std::sin(static_cast<double>(t) * dt);
    const auto d = fd_time_derivative(Q, dt);
    double e = 0.0;
    for (Index c = 0; c < d.count(); ++c)
      e = std::max(e, std::abs(d.derivative(0, c) - std::cos(static_cast<double>(d.first_column + c) * dt)));
    h.push_back(std::log(dt));
    err.push_back(std::log(e));
  }
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sx += h[i];
    sy += err[i];
    sxx += h[i] * h[i];
    sxy += h[i] * err[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {std::abs(slope - 6.0) <= 0.3, "fitted slope " + fmt("%.3f", slope) + " over " + std::to_string(h.size()) +
                                            " step sizes"};
}

Outcome eckart_young() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    MatrixXd Q(200, 50);
    for (Index i = 0; i < Q.size(); ++i) Q.data()[i] = g(gen);
    const auto full = compute_pod(Q);
    for (Index r : {1, 10, 25, 49}) {
      const auto b = full.truncated(r);
      const double e = (b.reconstruct(b.project(Q)) - Q).norm();
      const double tail = full.singular_values.tail(50 - r).norm();
      worst = std::max(worst, std::abs(e - tail) / tail);
    }
  }
  return {worst <= 1e-8, "worst relative gap " + fmt("%.2e", worst) + " over 10 seeds"};
}

Outcome bounded_growth() {
  const Index r_s = 1, r_f = 1;
  MatrixXd A_stable(2, 2), A_unstable(2, 2);
  A_stable << 0.0, 1.0, -1.0, 0.0;
  A_unstable << 0.5, 1.0, 0.0, 0.3;
  const auto mono = [&](const MatrixXd& A) {
    return OperatorSet::make_monolithic(r_s, r_f, VectorXd::Zero(2), A, MatrixXd::Zero(2, 3));
  };
  const VectorXd q0 = (VectorXd(2) << 1.0, 0.0).finished();
  const double dt = 0.01;
  const auto train = integrate_rom(mono(A_stable), q0, dt, 629);
  const auto cand = integrate_rom(mono(A_unstable), q0, dt, 1000);
  const Eigen::EigenSolver<MatrixXd> es(A_unstable);
  const double max_re = es.eigenvalues().real().maxCoeff();
  const bool rejected = !bounded_growth_check(train.states, cand.states, 10.0, cand.blew_up()).pass;
  bool self_ok = true;
  for (double alpha : {1.0, 1.5, 10.0, 100.0})
    self_ok = self_ok && bounded_growth_check(train.states, train.states, alpha).pass;
  return {max_re > 0.0 && rejected && self_ok,
          std::string("unstable candidate (max Re lambda ") + fmt("%.2f", max_re) + ") " +
              (rejected ? "rejected" : "accepted") + " at alpha 10; training trajectory " +
              (self_ok ? "passes" : "fails") + " for alpha >= 1"};
}

Outcome shift_compensation() {
  MatrixXd A(3, 3);
  A << -0.1, 1.0, 0.0, -1.0, -0.2, 0.3, 0.0, -0.3, -0.05;
  const VectorXd delta = (VectorXd(3) << 0.8, -0.5, 0.25).finished();
  const double dt = 0.01;
  const Index k = 500;
  MatrixXd Y(3, k), Yd(3, k);
  VectorXd q = (VectorXd(3) << 1.0, 0.5, -0.7).finished();
  for (Index t = 0; t < k; ++t) {
    Y.col(t) = q - delta;
    Yd.col(t) = A * q;
    const VectorXd k1 = A * q, k2 = A * (q + 0.5 * dt * k1), k3 = A * (q + 0.5 * dt * k2), k4 = A * (q + dt * k3);
    q += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  // Shifted data y = q - delta obeys y' = A y + A delta.
  const auto res = infer_monolithic(Y, Yd, 1, RegWeights{});
  const VectorXd projected_shift = -delta;
  const double err = (res.ops.c() + res.ops.A() * projected_shift).cwiseAbs().maxCoeff();
  return {err <= 1e-8, "max |c + A s| = " + fmt("%.2e", err)};
}

Outcome determinism() {
  const auto run = [](const std::string& name, double& seconds) {
    auto cfg = default_config();
    cfg.run.out_dir = scratch(name).string();
    std::ostringstream log;
    pl::Pipeline p(cfg, log);
    const auto t0 = std::chrono::steady_clock::now();
    auto m = p.run(stages_through_evaluate());
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fs::remove_all(cfg.run.out_dir);
    return m;
  };
  double t1 = 0.0, t2 = 0.0;
  const auto a = run("det_a", t1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto b = run("det_b", t2);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].name == b[i].name && a[i].sha256 == b[i].sha256;
  const double check = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {same && check < 2.0 * t1, std::to_string(a.size()) + " artifacts, hashes " +
                                         (same ? "identical" : "differ") + "; rerun and compare " + fmt("%.2f", check) +
                                         " s vs single run " + fmt("%.2f", t1) + " s"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "flow-condition table reproduction", 1.0, flow_table_reproduction},
      {2, "final-time consistency", 1.0, final_time},
      {3, "operator recovery oracle", 30.0, operator_recovery},
      {4, "complexity counts", 1.0, complexity_counts},
      {5, "prediction speedup", 60.0, prediction_speedup},
      {6, "prediction accuracy", 120.0, prediction_accuracy},
      {7, "finite-difference order", 5.0, fd_order},
      {8, "Eckart-Young truncation error", 5.0, eckart_young},
      {9, "bounded growth constraint", 5.0, bounded_growth},
      {10, "shift compensation", 5.0, shift_compensation},
      {11, "pipeline determinism", 600.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.time_limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), s, c.time_limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures ? 1 : 0;
}
