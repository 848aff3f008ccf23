#pragma once

// Synthetic coupled full-order model: a linear modal structure coupled
// linearly to 1-D viscous Burgers, plus trajectory generation and
// sixth-order finite-difference time derivatives.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "blockopinf/error.hpp"
#include "blockopinf/ode.hpp"
#include "blockopinf/operators.hpp"
#include "blockopinf/pod.hpp"
#include "blockopinf/snapshots.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One period at 20.39 Hz resolved by 200 steps.
inline constexpr double kDefaultFomDt = 1.0 / 20.39 / 200.0;

inline constexpr const char* kGdispGroup = "gdisp";
inline constexpr const char* kGvelGroup = "gvel";
inline constexpr const char* kFluidGroup = "velocity";

/// Undamped-or-damped modal oscillators in first-order form [eta; eta'].
struct ModalStructure {
  VectorXd omega;  // rad/s
  VectorXd zeta;

  Index modes() const noexcept { return omega.size(); }

  void validate() const {
    if (omega.size() < 1) throw ConfigError("modal structure needs at least one mode");
    if (zeta.size() != omega.size()) throw ConfigError("one damping ratio per mode required");
    for (Index i = 0; i < omega.size(); ++i) {
      if (!(omega(i) > 0.0) || !std::isfinite(omega(i))) throw ConfigError("modal frequencies must be positive");
      if (!(zeta(i) >= 0.0) || !std::isfinite(zeta(i))) throw ConfigError("damping ratios must be nonnegative");
    }
  }

  /// [[0, I], [-diag(omega^2), -diag(2 omega zeta)]].
  MatrixXd state_matrix() const {
    const Index m = modes();
    MatrixXd A = MatrixXd::Zero(2 * m, 2 * m);
    A.topRightCorner(m, m).setIdentity();
    A.bottomLeftCorner(m, m).diagonal() = -omega.array().square().matrix();
    A.bottomRightCorner(m, m).diagonal() = -(2.0 * omega.array() * zeta.array()).matrix();
    return A;
  }

  /// Sum over modes of eta'^2 + omega^2 eta^2; conserved when undamped and uncoupled.
  double energy(const Eigen::Ref<const VectorXd>& qs) const {
    const Index m = modes();
    return (qs.tail(m).array().square() + omega.array().square() * qs.head(m).array().square()).sum();
  }
};

struct FomConfig {
  Index m = 4;
  Index n_f = 64;
  double nu = 0.05;
  double kappa_f = 0.1;
  double kappa_s = 0.1;
  std::vector<double> frequencies_hz{9.6, 38.2, 48.3, 91.5};
  std::vector<double> damping{};  // empty: all zero
  double quadratic_scale = 1.0;
  double dt = kDefaultFomDt;
  Index steps = 1000;
  std::uint64_t seed = 0;
  double gvel_perturbation = 0.1;
  double gdisp_perturbation = 0.0;

  void validate() const {
    if (m < 1) throw ConfigError("fom.m must be positive");
    if (n_f < 1) throw ConfigError("fom.n_f must be positive");
    if (m > n_f) throw ConfigError("fom.m must not exceed fom.n_f");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("fom.nu must be positive");
    if (!std::isfinite(kappa_f) || !std::isfinite(kappa_s)) throw ConfigError("fom coupling gains must be finite");
    if (static_cast<Index>(frequencies_hz.size()) < m)
      throw ConfigError("fom.frequencies lists " + std::to_string(frequencies_hz.size()) + " values for " +
                        std::to_string(m) + " modes");
    if (!damping.empty() && static_cast<Index>(damping.size()) < m)
      throw ConfigError("fom.damping lists fewer values than modes");
    if (!std::isfinite(quadratic_scale)) throw ConfigError("fom.quadratic_scale must be finite");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("fom.dt must be positive");
    if (steps < 1) throw ConfigError("fom.steps must be positive");
  }

  ModalStructure structure() const {
    ModalStructure s;
    s.omega.resize(m);
    s.zeta = VectorXd::Zero(m);
    for (Index i = 0; i < m; ++i) {
      s.omega(i) = 2.0 * std::numbers::pi * frequencies_hz[static_cast<std::size_t>(i)];
      if (!damping.empty()) s.zeta(i) = damping[static_cast<std::size_t>(i)];
    }
    return s;
  }
};

/// Full-order coupled system held as a block OperatorSet at full dimension.
class CoupledFom {
 public:
  CoupledFom(ModalStructure structure, OperatorSet ops, VectorXd qoi_weights, double nu, double kappa_f,
             double kappa_s, double quadratic_scale)
      : structure_(std::move(structure)),
        ops_(std::move(ops)),
        qoi_(std::move(qoi_weights)),
        nu_(nu),
        kappa_f_(kappa_f),
        kappa_s_(kappa_s),
        quadratic_scale_(quadratic_scale) {
    if (ops_.kind() != OperatorKind::block) throw DomainError("CoupledFom: block operators required");
    if (ops_.r_s() != 2 * structure_.modes()) throw ShapeError("CoupledFom: n_s must equal twice the mode count");
    if (qoi_.size() != ops_.r_f()) throw ShapeError("CoupledFom: QoI weights must cover the fluid state");
    for (auto b : kAllBlocks)
      if (ops_.has(b) && !ops_.block(b).allFinite())
        throw NumericError("CoupledFom: block " + std::string(block_name(b)) + " is not finite");
  }

  Index m() const noexcept { return structure_.modes(); }
  Index n_s() const noexcept { return ops_.r_s(); }
  Index n_f() const noexcept { return ops_.r_f(); }
  Index n() const noexcept { return ops_.r(); }
  double nu() const noexcept { return nu_; }
  double h() const noexcept { return 1.0 / static_cast<double>(n_f() + 1); }
  double kappa_f() const noexcept { return kappa_f_; }
  double kappa_s() const noexcept { return kappa_s_; }
  double quadratic_scale() const noexcept { return quadratic_scale_; }
  const ModalStructure& structure() const noexcept { return structure_; }
  const OperatorSet& operators() const noexcept { return ops_; }
  const VectorXd& qoi_weights() const noexcept { return qoi_; }

  /// True when H_s, L_s, G_s, L_f, G_f are all absent.
  bool agard_like() const noexcept {
    for (auto b : {BlockId::H_s, BlockId::L_s, BlockId::G_s, BlockId::L_f, BlockId::G_f})
      if (ops_.has(b)) return false;
    return true;
  }

  VariableLayout layout() const {
    return VariableLayout({{kGdispGroup, m()}, {kGvelGroup, m()}, {kFluidGroup, n_f()}});
  }

  /// QoI weights padded with zeros over the structural rows.
  VectorXd qoi_full_weights() const {
    VectorXd w = VectorXd::Zero(n());
    w.tail(n_f()) = qoi_;
    return w;
  }

  double qoi(const Eigen::Ref<const VectorXd>& q) const { return qoi_.dot(q.tail(n_f())); }

  VectorXd qoi_series(const Eigen::Ref<const MatrixXd>& Q) const {
    if (Q.rows() != n()) throw ShapeError("CoupledFom::qoi_series: row count mismatch");
    return (qoi_.transpose() * Q.bottomRows(n_f())).transpose();
  }

  /// Structural state eta' = perturbation on every mode, eta = gdisp, fluid at rest.
  VectorXd initial_state(double gvel, double gdisp = 0.0) const {
    VectorXd q = VectorXd::Zero(n());
    q.head(m()).setConstant(gdisp);
    q.segment(m(), m()).setConstant(gvel);
    return q;
  }

  VectorXd rhs(const Eigen::Ref<const VectorXd>& q) const {
    if (q.size() != n()) throw ShapeError("CoupledFom::rhs: state size mismatch");
    RhsEvaluator f(ops_);
    return f(VectorXd(q));
  }

 private:
  ModalStructure structure_;
  OperatorSet ops_;
  VectorXd qoi_;
  double nu_, kappa_f_, kappa_s_, quadratic_scale_;
};

/// Centered-difference discretization of -q q_x in compact quadratic form.
inline MatrixXd burgers_quadratic(Index n_f, double h, double scale = 1.0) {
  MatrixXd H = MatrixXd::Zero(n_f, compact_size(n_f));
  const double w = scale / (2.0 * h);
  for (Index j = 0; j < n_f; ++j) {
    if (j + 1 < n_f) H(j, compact_index(j, j + 1, n_f)) -= w;
    if (j >= 1) H(j, compact_index(j - 1, j, n_f)) += w;
  }
  return H;
}

inline MatrixXd second_difference(Index n, double nu, double h) {
  MatrixXd A = MatrixXd::Zero(n, n);
  const double s = nu / (h * h);
  for (Index i = 0; i < n; ++i) {
    A(i, i) = -2.0 * s;
    if (i > 0) A(i, i - 1) = s;
    if (i + 1 < n) A(i, i + 1) = s;
  }
  return A;
}

inline CoupledFom build_synthetic_fom(const FomConfig& cfg) {
  cfg.validate();
  ModalStructure st = cfg.structure();
  st.validate();
  const Index m = cfg.m, n_s = 2 * m, n_f = cfg.n_f;
  const double h = 1.0 / static_cast<double>(n_f + 1);
  const VectorXd w = VectorXd::Constant(n_f, 1.0 / static_cast<double>(n_f));

  auto ops = OperatorSet::make_block(n_s, n_f);
  ops.set_block(BlockId::c_s, MatrixXd::Zero(n_s, 1));
  ops.set_block(BlockId::c_f, MatrixXd::Zero(n_f, 1));
  ops.set_block(BlockId::A_s, st.state_matrix());
  ops.set_block(BlockId::A_f, second_difference(n_f, cfg.nu, h));
  MatrixXd Es = MatrixXd::Zero(n_s, n_f);
  for (Index i = m; i < n_s; ++i) Es.row(i) = cfg.kappa_s * w.transpose();
  ops.set_block(BlockId::E_s, std::move(Es));
  MatrixXd Ef = MatrixXd::Zero(n_f, n_s);
  for (Index i = 0; i < m; ++i) Ef(i, i) = cfg.kappa_f;
  ops.set_block(BlockId::E_f, std::move(Ef));
  ops.set_block(BlockId::H_f, burgers_quadratic(n_f, h, cfg.quadratic_scale));
  return CoupledFom(std::move(st), std::move(ops), w, cfg.nu, cfg.kappa_f, cfg.kappa_s, cfg.quadratic_scale);
}

/// Hand-written right-hand side of the synthetic system, independent of the
/// operator machinery.
inline VectorXd synthetic_rhs_direct(const CoupledFom& fom, const Eigen::Ref<const VectorXd>& q) {
  const Index m = fom.m(), n_s = fom.n_s(), n_f = fom.n_f();
  const double h = fom.h(), s = fom.nu() / (h * h), a = fom.quadratic_scale() / (2.0 * h);
  const auto& om = fom.structure().omega;
  const auto& ze = fom.structure().zeta;
  VectorXd out(n_s + n_f);
  const double mean = q.tail(n_f).mean();
  for (Index i = 0; i < m; ++i) {
    out(i) = q(m + i);
    out(m + i) = -om(i) * om(i) * q(i) - 2.0 * om(i) * ze(i) * q(m + i) + fom.kappa_s() * mean;
  }
  for (Index j = 0; j < n_f; ++j) {
    const double u = q(n_s + j);
    const double ul = j > 0 ? q(n_s + j - 1) : 0.0;
    const double ur = j + 1 < n_f ? q(n_s + j + 1) : 0.0;
    double v = s * (ul - 2.0 * u + ur) - a * u * (ur - ul);
    if (j < m) v += fom.kappa_f() * q(j);
    out(n_s + j) = v;
  }
  return out;
}

/// RK4 trajectory with `columns` snapshots; column 0 is q0.
inline SnapshotSet integrate_fom(const CoupledFom& fom, const Eigen::Ref<const VectorXd>& q0, double dt, Index columns,
                                 double t0 = 0.0) {
  if (q0.size() != fom.n()) throw ShapeError("integrate_fom: initial state size mismatch");
  if (!(dt > 0.0)) throw DomainError("integrate_fom: dt must be positive");
  if (columns < 1) throw DomainError("integrate_fom: at least one column required");
  RhsEvaluator f(fom.operators());
  auto traj = rk4_integrate(f, q0, dt, columns);
  if (traj.blowup_column)
    throw BlowUpError("integrate_fom: non-finite state at step " + std::to_string(*traj.blowup_column),
                      static_cast<long>(*traj.blowup_column));
  return SnapshotSet(std::move(traj.states), dt, fom.layout(), t0);
}

/// Exact time derivatives f(q) for every snapshot column.
inline MatrixXd fom_derivatives(const CoupledFom& fom, const Eigen::Ref<const MatrixXd>& Q) {
  if (Q.rows() != fom.n()) throw ShapeError("fom_derivatives: row count mismatch");
  RhsEvaluator f(fom.operators());
  MatrixXd out(Q.rows(), Q.cols());
  VectorXd q(Q.rows()), dq(Q.rows());
  for (Index t = 0; t < Q.cols(); ++t) {
    q = Q.col(t);
    f(q, dq);
    out.col(t) = dq;
  }
  return out;
}

/// Reduced states and their exact derivatives.
struct ReducedTrajectory {
  MatrixXd states;       // r x k
  MatrixXd derivatives;  // r x k
};

/// Integrates q' = V^T f(V q) so every state lies in the span of the basis and
/// the reduced derivative V^T f(V q) is exact.
inline ReducedTrajectory integrate_projected(const CoupledFom& fom, const CoupledBasis& basis,
                                             const Eigen::Ref<const VectorXd>& qhat0, double dt, Index columns) {
  if (basis.n_s() != fom.n_s() || basis.n_f() != fom.n_f())
    throw ShapeError("integrate_projected: basis does not match the FOM dimensions");
  if (qhat0.size() != basis.r_s() + basis.r_f()) throw ShapeError("integrate_projected: initial state size mismatch");
  const MatrixXd V = basis.matrix();
  const MatrixXd Vt = V.transpose();
  RhsEvaluator full(fom.operators());
  VectorXd q(fom.n()), dq(fom.n());
  auto reduced = [&](const VectorXd& qh, VectorXd& out) {
    q.noalias() = V * qh;
    full(q, dq);
    out.noalias() = Vt * dq;
  };
  auto traj = rk4_integrate(reduced, qhat0, dt, columns);
  if (traj.blowup_column)
    throw BlowUpError("integrate_projected: non-finite state at step " + std::to_string(*traj.blowup_column),
                      static_cast<long>(*traj.blowup_column));
  ReducedTrajectory out{std::move(traj.states), MatrixXd(qhat0.size(), columns)};
  VectorXd d(qhat0.size());
  for (Index t = 0; t < columns; ++t) {
    reduced(out.states.col(t), d);
    out.derivatives.col(t) = d;
  }
  return out;
}

/// Seeded initial condition: every structural coordinate and fluid point drawn
/// uniformly from [-amplitude, amplitude].
inline VectorXd random_initial_state(Index n, double amplitude, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  VectorXd q(n);
  for (Index i = 0; i < n; ++i) q(i) = u(gen);
  return q;
}

/// Sixth-order centered finite differences. Column c of `derivative`
/// corresponds to snapshot column first_column + c.
struct FdDerivative {
  MatrixXd derivative;
  Index first_column = 0;
  Index last_column = 0;  // inclusive

  Index count() const noexcept { return derivative.cols(); }
};

inline constexpr Index kFdHalfWidth = 3;

inline FdDerivative fd_time_derivative(const Eigen::Ref<const MatrixXd>& Q, double dt) {
  if (!(dt > 0.0)) throw DomainError("fd_time_derivative: dt must be positive");
  const Index k = Q.cols();
  if (k < 2 * kFdHalfWidth + 1)
    throw InsufficientDataError("fd_time_derivative: need at least 7 snapshots, got " + std::to_string(k));
  static constexpr double w[7] = {-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0};
  const Index count = k - 2 * kFdHalfWidth;
  FdDerivative out{MatrixXd::Zero(Q.rows(), count), kFdHalfWidth, k - kFdHalfWidth - 1};
  const double scale = 1.0 / (60.0 * dt);
  for (Index c = 0; c < count; ++c) {
    auto col = out.derivative.col(c);
    for (int s = 0; s < 7; ++s)
      if (w[s] != 0.0) col += w[s] * Q.col(c + s);
    col *= scale;
  }
  return out;
}

inline FdDerivative fd_time_derivative(const SnapshotSet& s) { return fd_time_derivative(s.data(), s.dt()); }

}  // namespace bopinf
