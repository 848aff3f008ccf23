#pragma once

// Dimensional and nondimensional solver inputs for a flow condition:
// freestream velocity, temperature, Sutherland viscosity, Reynolds number and
// time-step sizes.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"

namespace bopinf::flutter {

struct Constants {
  double L = 1.833;              // characteristic length, ft
  double L_nondim = 1.833;       // grid length units
  double f_char = 20.39;         // frequency of interest, Hz
  double N = 200.0;              // time steps per period
  double gamma = 1.4;            // ratio of specific heats
  double R = 1716.49;            // gas constant, ft lbf / (slug R)
  double C = 198.6;              // Sutherland constant, R
  double T_ref = 518.69;         // R
  double mu_ref = 3.737e-7;      // slug / (ft s)

  void validate() const {
    for (double v : {L, L_nondim, f_char, N, gamma, R, C, T_ref, mu_ref})
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("flutter constants must be positive and finite");
  }
};

struct FlowCondition {
  double mach = 0.0;
  double q_inf = 0.0;    // lb/ft^2
  double rho = 0.0;      // slug/ft^3
  double u_inf = 0.0;    // ft/s
  double a = 0.0;        // ft/s
  double T = 0.0;        // R
  double mu = 0.0;       // slug/(ft s)
  double Re = 0.0;
  double Re_L = 0.0;     // per grid length unit
  double dt_dim = 0.0;   // s
  double dt_nondim = 0.0;
};

inline double sutherland_viscosity(double T, const Constants& c = {}) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("sutherland_viscosity: temperature must be positive");
  return c.mu_ref * (c.T_ref + c.C) / (T + c.C) * std::pow(T / c.T_ref, 1.5);
}

inline double dimensional_time_step(const Constants& c = {}) { return 1.0 / c.f_char / c.N; }

inline FlowCondition compute_flow_condition(double mach, double q_inf, double rho, const Constants& c = {}) {
  c.validate();
  for (double v : {mach, q_inf, rho})
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("compute_flow_condition: inputs must be positive and finite");
  FlowCondition f;
  f.mach = mach;
  f.q_inf = q_inf;
  f.rho = rho;
  f.u_inf = std::sqrt(2.0 * q_inf / rho);
  f.a = f.u_inf / mach;
  f.T = f.a * f.a / (c.gamma * c.R);
  f.mu = sutherland_viscosity(f.T, c);
  f.Re = rho * f.u_inf * c.L / f.mu;
  f.Re_L = f.Re / c.L_nondim;
  f.dt_dim = dimensional_time_step(c);
  f.dt_nondim = f.a * (c.L_nondim / c.L) * f.dt_dim;
  return f;
}

/// Density that reproduces a given freestream velocity at dynamic pressure q.
inline double density_from_velocity(double q_inf, double u_inf) {
  if (!(q_inf > 0.0) || !(u_inf > 0.0)) throw DomainError("density_from_velocity: inputs must be positive");
  return 2.0 * q_inf / (u_inf * u_inf);
}

/// Solver input names for each computed quantity.
inline const std::vector<std::pair<std::string, std::string>>& solver_parameter_names() {
  static const std::vector<std::pair<std::string, std::string>> names{
      {"u_inf", "uinf"},        {"q_inf", "qinf"},         {"T", "temperature"},
      {"Re_L", "reynolds_number"}, {"M_inf", "mach_number"}, {"dt_nondim", "time_step_nondim"}};
  return names;
}

inline csv::Table flow_table(const std::vector<FlowCondition>& rows) {
  csv::Table t({"mach", "q_inf", "rho", "u_inf", "a", "temperature", "mu", "reynolds", "reynolds_per_length", "dt_dim",
                "dt_nondim"});
  for (const auto& f : rows)
    t.add_row({csv::fmt(f.mach), csv::fmt(f.q_inf), csv::fmt(f.rho), csv::fmt(f.u_inf), csv::fmt(f.a), csv::fmt(f.T),
               csv::fmt(f.mu), csv::fmt(f.Re), csv::fmt(f.Re_L), csv::fmt(f.dt_dim), csv::fmt(f.dt_nondim)});
  return t;
}

}  // namespace bopinf::flutter
