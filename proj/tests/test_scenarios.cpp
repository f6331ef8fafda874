#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "tphdg/error.hpp"
#include "tphdg/scenarios.hpp"

using namespace tphdg;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Small variant of the homogeneous run that finishes in well under a second.
ScenarioConfig small_config() {
  ScenarioConfig c = ScenarioConfig::desk();
  c.nx = c.ny = 6;
  c.k = 1;
  c.dt = 0.02;
  c.T = 0.1;
  c.snapshot_times.clear();
  return c;
}

}  // namespace

TEST(Wavelet, PeakAndZeros) {
  const PointSource s;
  EXPECT_DOUBLE_EQ(wavelet(s, s.delay), 10.0);
  const double quarter = 1.0 / (4.0 * s.frequency);
  EXPECT_NEAR(wavelet(s, s.delay + quarter), 0.0, 1e-14);
  EXPECT_NEAR(wavelet(s, s.delay - quarter), 0.0, 1e-14);
  for (int i = 0; i <= 200; ++i) EXPECT_LE(std::abs(wavelet(s, i * 0.005)), s.amplitude);
  EXPECT_NEAR(wavelet(s, 0.0), 10.0 * std::cos(2 * kPi * 5 * 0.3) * std::exp(-2 * 25 * 0.09), 1e-14);
}

TEST(Wavelet, OnsetTime) {
  PointSource s;
  EXPECT_LT(onset_time(s), 0.0);  // the literal delay is active from t = 0
  s.delay = 0.9;
  const double t = onset_time(s);
  EXPECT_NEAR(t, 0.9 - std::sqrt(std::log(1e8) / 50.0), 2e-3);
  EXPECT_LE(std::abs(wavelet(s, t * 0.99)), 1e-8 * s.amplitude);
}

TEST(SourceProfile, ZeroAtCenterAndOdd) {
  const PointSource s;
  const double eps = 50.0 / 3.0;
  const auto c = source_profile(s, s.location, eps);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
  for (const Point d : {Point{3.0, 0.0}, Point{-7.0, 11.0}, Point{20.0, 20.0}}) {
    const auto a = source_profile(s, s.location + d, eps);
    const auto b = source_profile(s, s.location - d, eps);
    EXPECT_NEAR(a[0], -b[0], 1e-15);
    EXPECT_NEAR(a[1], -b[1], 1e-15);
  }
  // The shear moment swaps the components of b.
  const Point d{4.0, 0.0};
  const auto v = source_profile(s, s.location + d, eps);
  const double g = std::exp(-16.0 / (2 * eps * eps)) / (eps * eps);
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(v[1], 4.0 * g, 1e-15);
}

TEST(SourceProfile, ValidationRejectsBadWidth) {
  PointSource s;
  s.epsilon = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.epsilon = 0.0;
  EXPECT_NO_THROW(s.validate());
}

TEST(Receivers, FieldIndex) {
  EXPECT_EQ(field_index("u2"), 1);
  EXPECT_EQ(field_index("q2"), 3);
  EXPECT_EQ(field_index("theta"), 10);
  EXPECT_THROW(field_index("w"), Error);
}

TEST(Receivers, ResolveStandardLocations) {
  const ScenarioConfig c = ScenarioConfig::desk();
  const Mesh m = c.build_mesh();
  for (Receiver r : c.receivers) {
    r.resolve(m);
    EXPECT_GE(r.element(), 0) << r.id();
  }
  Receiver out("far", {2000.0, 10.0});
  EXPECT_THROW(out.resolve(m), Error);
}

TEST(Scenario, ConfigValidation) {
  ScenarioConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.source.location = {-1.0, 750.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Scenario, SmallHomogeneousRun) {
  const ScenarioConfig c = small_config();
  int snapshots = 0;
  ScenarioConfig cs = c;
  cs.snapshot_times = {0.04};
  const ScenarioResult r = run_scenario(cs, [&](int, double, const Mesh&, const DiscreteState&) { ++snapshots; });
  EXPECT_EQ(snapshots, 1);
  EXPECT_EQ(std::set<int>(r.region_tags.begin(), r.region_tags.end()), std::set<int>{0});
  ASSERT_EQ(r.receivers.size(), 3u);
  EXPECT_EQ(r.receivers[0].times().size(), 6u);
  EXPECT_GT(r.source_moment_norm, 0.0);
  EXPECT_LE(r.energy.max_relative_residual(), 1e-9);
  bool nonzero = false;
  for (double v : r.receivers[1].samples("u2")) nonzero = nonzero || v != 0.0;
  EXPECT_TRUE(nonzero);
}

TEST(Scenario, ZeroAmplitudeGivesZeroOutput) {
  ScenarioConfig c = small_config();
  c.source.amplitude = 0.0;
  const ScenarioResult r = run_scenario(c);
  for (const auto& rec : r.receivers)
    for (std::size_t i = 0; i < rec.fields().size(); ++i)
      for (double v : rec.samples(static_cast<int>(i))) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.state.X.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Scenario, HeterogeneousRegions) {
  ScenarioConfig c = small_config();
  c.materials[1] = named_parameter_set("L4");
  const ScenarioResult r = run_scenario(c);
  EXPECT_EQ(std::set<int>(r.region_tags.begin(), r.region_tags.end()), (std::set<int>{0, 1}));
  for (int e = 0; e < r.mesh.num_elements(); ++e)
    EXPECT_EQ(r.mesh.region(e), r.mesh.centroid(e).x >= 750.0 ? 1 : 0);
}

TEST(Scenario, ShearSourceAntisymmetry) {
  const ScenarioConfig c = small_config();
  const ScenarioResult r = run_scenario(c);
  EXPECT_LE(antisymmetry_error(r.mesh, r.layout, r.state, "u2"), 1e-6);
}

TEST(Scenario, CausalityReport) {
  Receiver a("a", {0.5, 0.5}, {"u2"});
  const Mesh m = build_structured_mesh(1, 1, {0, 0, 1, 1});
  a.resolve(m);
  DiscreteState s(m, DofLayout(0));
  a.record(m, s.layout, s, 0.0);
  s.X(s.layout.velocity(1), 0) = 1.0;
  a.record(m, s.layout, s, 1.0);
  const CausalityReport rep = causality_check({a}, 0.5);
  EXPECT_EQ(rep.samples_checked, 1);
  EXPECT_EQ(rep.max_relative, 0.0);
}
