#pragma once

// Fixed-step classical RK4 for autonomous systems q' = f(q).

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>

#include "blockopinf/error.hpp"

namespace bopinf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One RK4 step with reusable stage storage. `f(q, out)` writes f(q) into out.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(Index n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  template <typename Rhs>
  void step(Rhs& f, VectorXd& q, double dt) {
    const double h2 = 0.5 * dt;
    f(q, k1_);
    tmp_.noalias() = q + h2 * k1_;
    f(tmp_, k2_);
    tmp_.noalias() = q + h2 * k2_;
    f(tmp_, k3_);
    tmp_.noalias() = q + dt * k3_;
    f(tmp_, k4_);
    q.noalias() += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  VectorXd k1_, k2_, k3_, k4_, tmp_;
};

struct Rk4Trajectory {
  MatrixXd states;                     // n x (columns actually computed)
  std::optional<Index> blowup_column;  // first column that would have been non-finite / too large
};

/// Integrates `steps` columns (column 0 is q0). Stops early when the state
/// becomes non-finite or exceeds `blowup_threshold` in magnitude.
template <typename Rhs>
Rk4Trajectory rk4_integrate(Rhs&& f, const Eigen::Ref<const VectorXd>& q0, double dt, Index columns,
                            double blowup_threshold = std::numeric_limits<double>::infinity()) {
  if (!(dt > 0.0)) throw DomainError("rk4_integrate: dt must be positive");
  if (columns < 1) throw DomainError("rk4_integrate: at least one column required");
  const Index n = q0.size();
  Rk4Trajectory out;
  out.states.resize(n, columns);
  out.states.col(0) = q0;
  VectorXd q = q0;
  Rk4Stepper stepper(n);
  for (Index t = 1; t < columns; ++t) {
    stepper.step(f, q, dt);
    if (!q.allFinite() || q.cwiseAbs().maxCoeff() > blowup_threshold) {
      out.blowup_column = t;
      out.states.conservativeResize(n, t);
      return out;
    }
    out.states.col(t) = q;
  }
  return out;
}

}  // namespace bopinf
