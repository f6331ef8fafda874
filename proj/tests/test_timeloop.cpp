#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "tphdg/error.hpp"
#include "tphdg/timeloop.hpp"
#include "tphdg/verify.hpp"

using namespace tphdg;

namespace {

const Rectangle kUnit{0, 0, 1, 1};

MaterialParameters undamped() {
  MaterialParameters p = named_parameter_set("L1");
  p.eta_over_kappa = 0.0;
  p.chi = 1e14;
  p.tau = 1e14;
  return p;
}

}  // namespace

TEST(TimeGrid, HitsFinalTime) {
  const TimeGrid g = TimeGrid::from_target(0.5, 0.03);
  EXPECT_EQ(g.steps, 17);
  EXPECT_DOUBLE_EQ(g.time(g.steps), 0.5);
  EXPECT_NEAR(g.dt * g.steps, 0.5, 1e-15);
  EXPECT_EQ(TimeGrid::from_steps(1.0, 8).dt, 0.125);
}

TEST(Timeloop, ScalarThetaStep) {
  EXPECT_NEAR(scalar_theta_step(1.0, 1.0, 0.1), 19.0 / 21.0, 1e-15);
  EXPECT_NEAR(scalar_theta_step(1.0, 1.0, 0.1, 1.0), 1.0 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(scalar_theta_step(2.0, 0.0, 0.1), 2.0);
  // Midpoint rule is A-stable: |R(z)| <= 1 for any positive lambda dt.
  for (double z : {1e-3, 1.0, 1e3, 1e9}) EXPECT_LE(std::abs(scalar_theta_step(1.0, z, 1.0)), 1.0);
}

TEST(Timeloop, ThetaUpdate) {
  EXPECT_DOUBLE_EQ(theta_update(3.0, 1.0, 0.5), 5.0);
  EXPECT_DOUBLE_EQ(theta_update(3.0, 1.0, 1.0), 3.0);
}

TEST(Energy, ClosedFormExamples) {
  const Mesh m = build_structured_mesh(2, 2, kUnit);
  const MaterialField mats(named_parameter_set("L1"));
  const DofLayout L(1);
  auto solid = [](const Point&, double* v) {
    std::fill(v, v + 11, 0.0);
    v[0] = 1.0;
  };
  EXPECT_NEAR(discrete_energy(m, mats, L, project_state(m, L, solid).X), 0.5, 1e-14);
  auto stress = [](const Point&, double* v) {
    std::fill(v, v + 11, 0.0);
    v[6] = v[7] = 1.0;
  };
  EXPECT_NEAR(discrete_energy(m, mats, L, project_state(m, L, stress).X), 1.0 / 300.0, 1e-15);
  auto zero = [](const Point&, double* v) { std::fill(v, v + 11, 0.0); };
  EXPECT_EQ(discrete_energy(m, mats, L, project_state(m, L, zero).X), 0.0);
}

TEST(Energy, ZeroStepsLeavesStateUnchanged) {
  const Mesh m = build_structured_mesh(2, 2, kUnit);
  const MaterialField mats(named_parameter_set("L1"));
  const Stepper st(m, mats, 1, 0.01, ProblemData{});
  const DiscreteState s0 = random_state(m, st.layout(), 3);
  const RunResult r = run(st, s0, TimeGrid::from_steps(0.0, 0));
  EXPECT_TRUE(r.state.X == s0.X);
  ASSERT_EQ(r.energy.rows.size(), 1u);
  EXPECT_NEAR(r.energy.rows[0].E, st.energy(s0), 1e-15 * st.energy(s0));
}

TEST(Energy, FreeDecayBalanceAndMonotonicity) {
  const Mesh m = build_structured_mesh(3, 3, kUnit, SplitPattern::diagonal, 0.1, 7);
  const MaterialField mats(named_parameter_set("L1"));
  const EnergyCheck c = free_decay(m, 2, mats, 200, 0.01, 37);
  ASSERT_EQ(c.report.rows.size(), 201u);
  EXPECT_LE(c.max_relative_residual, 1e-11);
  EXPECT_LE(c.max_increase, 1e-12);
  EXPECT_LT(c.report.rows.back().E, c.report.rows.front().E);
  for (const auto& r : c.report.rows) {
    EXPECT_GE(r.damping_work, 0.0);
    EXPECT_GE(r.stab_work, 0.0);
  }
}

TEST(Energy, UndampedConservation) {
  const Mesh m = build_structured_mesh(3, 3, kUnit);
  const MaterialField mats(undamped());
  const EnergyCheck c = free_decay(m, 1, mats, 100, 0.01, 41);
  EXPECT_LE(c.conservation_defect, 1e-10);
  for (const auto& r : c.report.rows) EXPECT_LE(r.damping_work, 1e-12 * c.report.rows[0].E);
}

TEST(Energy, FlippedStabilizationBreaksBalance) {
  const Mesh m = build_structured_mesh(3, 3, kUnit);
  const MaterialField mats(named_parameter_set("L1"));
  StepperOptions opt;
  opt.assembly.stabilization_sign = -1.0;
  bool failed = false;
  try {
    const EnergyCheck c = free_decay(m, 1, mats, 200, 0.01, 37, opt);
    failed = c.max_increase > 1e-12 || c.max_relative_residual > 1e-11;
  } catch (const Error&) {
    failed = true;  // blow-up detected as a non-finite state
  }
  EXPECT_TRUE(failed);
}

TEST(Energy, CsvHeader) {
  EnergyReport rep;
  rep.rows.push_back({0, 0.0, 1.0, 0, 0, 0, 0, 0});
  std::ostringstream os;
  rep.write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "step,t,E,damping_work,stab_work,source_work,residual,relative_residual");
}

TEST(Timeloop, InitialConditions) {
  const Mesh m = build_structured_mesh(4, 4, kUnit);
  const DofLayout L(2);
  auto f = [](const Point&, double* v) {
    std::fill(v, v + 11, 0.0);
    v[9] = 1.0;
    v[10] = 1.0;
  };
  const DiscreteState s = set_initial_conditions(m, L, f);
  const Point c{0.5, 0.5};
  const auto v = evaluate_state(m, L, s.X, locate_point(m, c).element, c);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(v[i], 0.0);
  EXPECT_NEAR(v[9], 1.0, 1e-14);
  EXPECT_NEAR(v[10], 1.0, 1e-14);
}

TEST(Timeloop, DeterministicRuns) {
  const Mesh m = build_structured_mesh(3, 3, kUnit, SplitPattern::crisscross);
  const MaterialField mats(named_parameter_set("L1"));
  auto sol = std::make_shared<ManufacturedSolution>(mats.parameters(0));
  const Stepper st(m, mats, 1, 0.02, manufactured_problem(sol, mats));
  const DiscreteState s0 = project_state(m, st.layout(), sol->at(0.0));
  const RunResult a = run(st, s0, TimeGrid::from_steps(0.2, 10));
  const RunResult b = run(st, s0, TimeGrid::from_steps(0.2, 10));
  EXPECT_EQ(std::memcmp(a.state.X.data(), b.state.X.data(), sizeof(double) * a.state.X.size()), 0);
}

TEST(Timeloop, MonitorsSeeEveryStep) {
  const Mesh m = build_structured_mesh(2, 2, kUnit);
  const MaterialField mats(named_parameter_set("L1"));
  const Stepper st(m, mats, 0, 0.1, ProblemData{});
  std::vector<int> seen;
  run(st, random_state(m, st.layout(), 1), TimeGrid::from_steps(0.5, 5),
      {[&](int n, double, const DiscreteState&) { seen.push_back(n); }});
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4, 5}));
}

TEST(Timeloop, NonFiniteStateNamesField) {
  const Mesh m = build_structured_mesh(1, 1, kUnit);
  DiscreteState s(m, DofLayout(0));
  EXPECT_EQ(nonfinite_field(s), "");
  s.X(s.layout.theta_block(4), 1) = std::nan("");
  EXPECT_EQ(nonfinite_field(s), "theta");
}
