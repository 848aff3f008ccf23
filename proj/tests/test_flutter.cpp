#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "blockopinf/flutter.hpp"

using namespace bopinf;
using namespace bopinf::flutter;

namespace {

// Half a unit in the fourth significant figure of ref.
double four_figures(double ref) { return 0.5 * std::pow(10.0, std::floor(std::log10(std::abs(ref))) - 3.0); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Sutherland, FixedPointAndMonotonicity) {
  const Constants c;
  EXPECT_NEAR(sutherland_viscosity(c.T_ref), c.mu_ref, 1e-15 * c.mu_ref);
  EXPECT_NEAR(sutherland_viscosity(271.95), 2.1627e-7, four_figures(2.1627e-7));
  EXPECT_GT(sutherland_viscosity(2.0 * c.T_ref), c.mu_ref);
  double prev = 0.0;
  for (double T = 100.0; T < 2000.0; T += 50.0) {
    const double mu = sutherland_viscosity(T);
    EXPECT_GT(mu, prev);
    prev = mu;
  }
}

TEST(Sutherland, RejectsNonPositiveTemperature) {
  EXPECT_THROW(sutherland_viscosity(0.0), DomainError);
  EXPECT_THROW(sutherland_viscosity(-1.0), DomainError);
  EXPECT_THROW(sutherland_viscosity(std::nan("")), DomainError);
}

TEST(ComputeFlowCondition, SubsonicLowPressureExample) {
  const auto f = compute_flow_condition(0.901, 50.0, density_from_velocity(50.0, 728.37));
  EXPECT_NEAR(f.u_inf, 728.37, 1e-10);
  EXPECT_NEAR(f.T, 271.95, four_figures(271.95));
  EXPECT_NEAR(f.Re, 1.164e6, four_figures(1.164e6));
  EXPECT_NEAR(f.dt_nondim, 0.19826, four_figures(0.19826));
}

TEST(ComputeFlowCondition, TransonicExample) {
  const auto f = compute_flow_condition(0.957, 70.0, density_from_velocity(70.0, 1084.60));
  EXPECT_NEAR(f.u_inf, 1084.60, 1e-10);
  EXPECT_NEAR(f.T, 534.49, four_figures(534.49));
  EXPECT_NEAR(f.dt_nondim, 0.27794, four_figures(0.27794));
}

TEST(ComputeFlowCondition, SupersonicExample) {
  const auto f = compute_flow_condition(1.141, 90.0, density_from_velocity(90.0, 1105.06));
  EXPECT_NEAR(f.u_inf, 1105.06, 1e-10);
  EXPECT_NEAR(f.T, 390.33, four_figures(390.33));
  EXPECT_NEAR(f.dt_nondim, 0.23752, four_figures(0.23752));
}

TEST(ComputeFlowCondition, DefiningRelations) {
  const Constants c;
  for (double M : {0.5, 0.901, 1.141, 2.0})
    for (double q : {10.0, 50.0, 90.0})
      for (double rho : {1e-4, 2e-4, 2.3769e-3}) {
        const auto f = compute_flow_condition(M, q, rho);
        EXPECT_LE(rel(f.u_inf, M * f.a), 1e-12);
        EXPECT_LE(rel(f.Re, rho * f.u_inf * c.L / f.mu), 1e-12);
        EXPECT_LE(rel(0.5 * rho * f.u_inf * f.u_inf, q), 1e-12);
        EXPECT_LE(rel(f.T * c.gamma * c.R, f.a * f.a), 1e-12);
        EXPECT_LE(rel(f.Re_L * c.L_nondim, f.Re), 1e-12);
        EXPECT_EQ(f.mu, sutherland_viscosity(f.T));
      }
}

TEST(ComputeFlowCondition, TimeStepAndFinalTime) {
  const Constants c;
  const double dt = dimensional_time_step(c);
  EXPECT_NEAR(dt * c.N * c.f_char, 1.0, 1e-15);
  EXPECT_NEAR(1000.0 * dt, 0.24522, 5e-6);
  EXPECT_NEAR(1000.0 * dt, 0.2453, 0.5e-3);
  EXPECT_EQ(compute_flow_condition(0.9, 50.0, 1e-4).dt_dim, dt);
}

TEST(ComputeFlowCondition, DensityScalingLaw) {
  const auto base = compute_flow_condition(0.957, 50.0, 1.2e-4);
  for (double s : {0.25, 2.0, 7.0}) {
    const double c2 = s * s;
    const auto f = compute_flow_condition(0.957, c2 * 50.0, c2 * 1.2e-4);
    EXPECT_LE(rel(f.u_inf, base.u_inf), 1e-14);
    EXPECT_LE(rel(f.a, base.a), 1e-14);
    EXPECT_LE(rel(f.T, base.T), 1e-14);
    EXPECT_LE(rel(f.mu, base.mu), 1e-14);
    EXPECT_LE(rel(f.dt_nondim, base.dt_nondim), 1e-14);
    EXPECT_LE(rel(f.Re, c2 * base.Re), 1e-13);
  }
}

TEST(ComputeFlowCondition, DomainErrors) {
  EXPECT_THROW(compute_flow_condition(0.0, 50.0, 1e-4), DomainError);
  EXPECT_THROW(compute_flow_condition(0.9, -1.0, 1e-4), DomainError);
  EXPECT_THROW(compute_flow_condition(0.9, 50.0, 0.0), DomainError);
  EXPECT_THROW(compute_flow_condition(0.9, 50.0, INFINITY), DomainError);
  Constants bad;
  bad.R = 0.0;
  EXPECT_THROW(compute_flow_condition(0.9, 50.0, 1e-4, bad), DomainError);
  EXPECT_THROW(density_from_velocity(0.0, 100.0), DomainError);
  EXPECT_THROW(density_from_velocity(50.0, 0.0), DomainError);
}

TEST(ComputeFlowCondition, CustomLengthScale) {
  Constants c;
  c.L_nondim = 1.0;
  const auto f = compute_flow_condition(0.9, 50.0, 1e-4, c);
  EXPECT_LE(rel(f.dt_nondim, f.a * f.dt_dim / c.L), 1e-14);
  EXPECT_LE(rel(f.Re_L, f.Re), 1e-14);
}

TEST(SolverParameterNames, Mapping) {
  const auto& n = solver_parameter_names();
  ASSERT_EQ(n.size(), 6u);
  EXPECT_EQ(n[0], (std::pair<std::string, std::string>{"u_inf", "uinf"}));
  EXPECT_EQ(n[1].second, "qinf");
  EXPECT_EQ(n[2].second, "temperature");
  EXPECT_EQ(n[3].second, "reynolds_number");
  EXPECT_EQ(n[4].second, "mach_number");
  EXPECT_EQ(n[5].second, "time_step_nondim");
}

TEST(FlowTable, LayoutAndRoundTrip) {
  const auto f = compute_flow_condition(0.901, 50.0, density_from_velocity(50.0, 728.37));
  const auto t = flow_table({f, f});
  const auto s = t.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "mach,q_inf,rho,u_inf,a,temperature,mu,reynolds,reynolds_per_length,dt_dim,dt_nondim");
  EXPECT_EQ(t.rows(), 2u);
  std::istringstream row(s.substr(s.find('\n') + 1));
  std::vector<double> cells;
  for (std::string cell; std::getline(row, cell, ',') && cells.size() < 11;) cells.push_back(std::stod(cell));
  ASSERT_EQ(cells.size(), 11u);
  EXPECT_EQ(cells[5], f.T);
  EXPECT_EQ(cells[7], f.Re);
  EXPECT_EQ(cells[10], f.dt_nondim);
}
