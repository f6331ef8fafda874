// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "tphdg/scenarios.hpp"
#include "tphdg/verify.hpp"

using namespace tphdg;

namespace {

constexpr double kPi = 3.14159265358979323846;

// h-convergence
constexpr double kCt = 0.25;
constexpr double kTolTheta = 0.15;
constexpr double kTolU = 0.2;
constexpr double kMmsT = 0.5;
// k-convergence
constexpr double kKDt = 1e-4;
constexpr double kKT = 0.1;
constexpr double kKMaxRatio = 1e-2;
// temporal rate
constexpr double kRate = 2.0;
constexpr double kRateTol = 0.1;
// energy
constexpr int kEnergySteps = 200;
constexpr double kEnergyResidual = 1e-11;
constexpr double kEnergyIncrease = 1e-12;
constexpr double kConservation = 1e-10;
// oracle, patch
constexpr double kOracle = 1e-10;
constexpr double kPatch = 1e-10;
constexpr int kPatchSteps = 10;
// projection and trace inequality
constexpr double kProjectionRateTol = 0.1;
constexpr double kTraceSpread = 2.0;
// scenarios
constexpr double kCausality = 1e-8;
constexpr double kAntisymmetry = 1e-6;
constexpr double kDelayedT0 = 0.9;
constexpr double kDelayedT = 1.1;

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("  info %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void print_table(const ConvergenceTable& t) {
  for (const auto& r : t.rows)
    info(t.param_name + fmt(" %-10.4g e_Theta %.3e  e_u %.3e  rate_Theta %.3f", r.param, r.e_theta, r.e_u,
                            r.rate_theta) +
         fmt("  rate_u %.3f", r.rate_u));
}

MmsOptions mms(const char* set, double T) {
  MmsOptions o;
  o.material = named_parameter_set(set);
  o.T = T;
  return o;
}

bool rates_ok(const ConvergenceTable& t, int k) {
  const auto& r = t.rows.back();
  return r.rate_theta >= k + 1 - kTolTheta && r.rate_u >= k + 2 - kTolU;
}

// Polynomial in space inside the k = 2 spaces, periodic in time.
class PolynomialTrig : public ExactSolution {
 public:
  std::string name() const override { return "polynomial trig"; }
  void fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const override {
    const Jet c = cos(2.0 * kPi * t), s = sin(2.0 * kPi * t);
    for (int i = 0; i < 11; ++i) {
      const double a = 0.3 + 0.1 * i, b = -0.2 + 0.05 * i;
      const Jet quad = i < 6 ? Jet(0.1 * i) * x * y : Jet(0.0);
      out[i] = (a * x + b * y + 1.0 + quad) * (i % 2 ? c : s + 0.5 * c);
    }
  }
};

void h_convergence() {
  bool ok = true;
  std::string detail;
  const std::vector<std::vector<int>> cells{{4, 8, 16, 32}, {4, 8, 16}};
  for (int k : {1, 2}) {
    const ConvergenceTable t = converge_h(k, cells[k - 1], mms("L1", kMmsT), kCt);
    print_table(t);
    ok = ok && rates_ok(t, k);
    if (!detail.empty()) detail += "; ";
    detail += fmt("k=%g finest rates %.3f / %.3f", k, t.rows.back().rate_theta, t.rows.back().rate_u) +
              fmt(" (need >= %.2f / %.2f)", k + 1 - kTolTheta, k + 2 - kTolU);
  }
  report(ok, "h-convergence", detail);
}

void near_incompressible() {
  const ConvergenceTable t = converge_h(1, {4, 8, 16}, mms("L2-repaired", kMmsT), kCt);
  print_table(t);
  report(rates_ok(t, 1), "near-incompressible",
         fmt("L2-repaired k=1 finest rates %.3f / %.3f (need >= %.2f / %.2f)", t.rows.back().rate_theta,
             t.rows.back().rate_u, 2 - kTolTheta, 3 - kTolU));
}

void k_convergence() {
  const ConvergenceTable t = converge_k(4, {1, 2, 3, 4}, kKDt, mms("L1", kKT));
  print_table(t);
  bool decreasing = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    decreasing = decreasing && t.rows[i].e_theta < t.rows[i - 1].e_theta &&
                 t.rows[i].e_u < t.rows[i - 1].e_u;
  const double rt = t.rows.back().e_theta / t.rows.front().e_theta;
  const double ru = t.rows.back().e_u / t.rows.front().e_u;
  const bool ok = decreasing && t.slope_theta() < 0 && t.slope_u() < 0 && rt <= kKMaxRatio &&
                  ru <= kKMaxRatio;
  report(ok, "k-convergence",
         std::string("strictly decreasing=") + (decreasing ? "yes" : "no") +
             fmt(", log slopes %.3f / %.3f, e(4)/e(1) %.2e / %.2e", t.slope_theta(), t.slope_u(), rt, ru) +
             fmt(" (need <= %.0e)", kKMaxRatio));
}

void temporal_rate() {
  const ConvergenceTable t = converge_dt(8, 3, {8, 16, 32, 64, 128}, mms("L1", kMmsT));
  print_table(t);
  const auto& r = t.rows.back();
  const bool ok = std::abs(r.rate_theta - kRate) <= kRateTol && std::abs(r.rate_u - kRate) <= kRateTol;
  info(fmt("least-squares slopes %.3f / %.3f", t.slope_theta(), t.slope_u()));
  // Same stepper with the spatial error removed.
  MmsOptions o = mms("L1", kMmsT);
  o.solution = std::make_shared<PolynomialTrig>();
  const ConvergenceTable p = converge_dt(4, 2, {32, 64, 128, 256}, o);
  info(fmt("spatially exact solution, k=2: finest rates %.3f / %.3f", p.rows.back().rate_theta,
           p.rows.back().rate_u));
  report(ok, "temporal-rate",
         fmt("h=1/8 k=3 finest rates %.3f / %.3f (need %.1f +- %.1f)", r.rate_theta, r.rate_u, kRate,
             kRateTol));
}

void energy() {
  const MaterialField l1(named_parameter_set("L1"));
  const Mesh mesh = build_structured_mesh(4, 4, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 5);
  const EnergyCheck c = free_decay(mesh, 2, l1, kEnergySteps, 0.01, 101);
  MaterialParameters p = named_parameter_set("L1");
  p.eta_over_kappa = 0.0;
  p.chi = 1e14;
  p.tau = 1e14;
  const EnergyCheck z = free_decay(mesh, 2, MaterialField(p), kEnergySteps, 0.01, 102);
  const bool ok = c.max_relative_residual <= kEnergyResidual && c.max_increase <= kEnergyIncrease &&
                  z.conservation_defect <= kConservation;
  report(ok, "energy",
         fmt("free decay residual %.2e (need <= %.0e), max increase %.2e (need <= %.0e)",
             c.max_relative_residual, kEnergyResidual, c.max_increase, kEnergyIncrease) +
             fmt(", zero-damping defect %.2e (need <= %.0e)", z.conservation_defect, kConservation));
}

void oracle() {
  double worst = 0.0;
  int instances = 0;
  for (const char* set : {"L1", "L3"}) {
    const MaterialField mats(named_parameter_set(set));
    auto sol = std::make_shared<ManufacturedSolution>(mats.parameters(0));
    const ProblemData data = manufactured_problem(sol, mats);
    for (int n : {1, 2})
      for (int k : {0, 1, 2}) {
        const Mesh m = build_structured_mesh(n, n, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 7);
        const DiscreteState init = random_state(m, DofLayout(k), 23 + k);
        const OracleResult r = oracle_monolithic(m, k, mats, init, data, 0.1, 0.01);
        worst = std::max(worst, r.max_relative_difference);
        ++instances;
      }
  }
  report(worst <= kOracle, "oracle",
         fmt("%g instances (2 and 8 elements, k=0..2, L1 and L3), max relative difference %.2e (need <= %.0e)",
             instances, worst, kOracle));
}

void patch() {
  const MaterialField mats(named_parameter_set("L1"));
  const Mesh m = build_structured_mesh(2, 2, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 7);
  double worst = 0.0;
  bool ok = true;
  for (int k : {0, 1, 2}) {
    const PatchResult r =
        patch_test(m, k, mats, std::make_shared<PolynomialSolution>(k + 1, k, 11 + k), kPatchSteps, 0.01, kPatch);
    ok = ok && r.passed;
    worst = std::max(worst, r.max_relative_error);
  }
  report(ok, "patch", fmt("k=0..2, %g steps, max relative error %.2e (need <= %.0e)", kPatchSteps, worst, kPatch));
}

void appendix_a() {
  auto f = [](const Point& p, double* v) { v[0] = std::sin(kPi * p.x) * std::sin(kPi * p.y) + std::exp(p.x - p.y); };
  std::vector<Mesh> meshes{build_structured_mesh(4, 4, {0, 0, 1, 1})};
  for (int i = 0; i < 3; ++i) meshes.push_back(refine_uniform(meshes.back()));
  bool ok = true;
  std::string detail = "projection rates";
  for (int l = 0; l <= 3; ++l) {
    const auto rows = projection_rate_report(f, meshes, l);
    const double rv = rows.back().volume_rate, rb = rows.back().boundary_rate;
    ok = ok && std::abs(rv - (l + 1)) <= kProjectionRateTol && std::abs(rb - (l + 1)) <= kProjectionRateTol;
    detail += fmt(" l=%g: %.3f/%.3f", l, rv, rb);
  }
  const Mesh coarse = build_structured_mesh(4, 4, {0, 0, 1, 1}, SplitPattern::crisscross, 0.1, 3);
  const Mesh fine = refine_uniform(coarse);
  double spread = 1.0;
  for (int l = 0; l <= 4; ++l) {
    const double a = trace_inequality_ratio(coarse, l, 20, 100 + l);
    const double b = trace_inequality_ratio(fine, l, 20, 200 + l);
    spread = std::max(spread, std::max(a / b, b / a));
  }
  ok = ok && spread <= kTraceSpread;
  report(ok, "appendix-a",
         detail + fmt(" (need l+1 +- %.1f); trace ratio spread %.3f over l=0..4 (need <= %.1f)",
                      kProjectionRateTol, spread, kTraceSpread));
}

void scenarios() {
  const ScenarioConfig desk = ScenarioConfig::desk();
  ScenarioConfig c = desk;
  c.snapshot_times.clear();
  const ComparisonResult cmp = run_comparison(c);
  const double anti = antisymmetry_error(cmp.full.mesh, cmp.full.layout, cmp.full.state, "u2");
  const CausalityReport literal = causality_check(cmp.full.receivers, onset_time(c.source, kCausality));
  info(fmt("literal source delay: onset %.3f s, %g samples in the pre-onset window",
           onset_time(c.source, kCausality), literal.samples_checked));

  ScenarioConfig d = c;
  d.source.delay = kDelayedT0;
  d.T = kDelayedT;
  const ScenarioResult delayed = run_scenario(d);
  const double onset = onset_time(d.source, kCausality);
  const CausalityReport causal = causality_check(delayed.receivers, onset);

  const double r1 = cmp.difference.at("r1"), r2 = cmp.difference.at("r2"), r3 = cmp.difference.at("r3");
  info(fmt("u2 difference norms r1 %.3e r2 %.3e r3 %.3e", r1, r2, r3));
  const bool ok = causal.samples_checked > 0 && causal.max_relative < kCausality && anti <= kAntisymmetry &&
                  r2 > 0.5 * (r1 + r3);
  report(ok, "scenarios",
         fmt("causality (t0=%.1f, window %.3f s, %g samples) %.2e", kDelayedT0, onset,
             causal.samples_checked, causal.max_relative) +
             fmt(" (need < %.0e)", kCausality) +
             fmt(", u2 antisymmetry %.2e (need <= %.0e), r2/mean(r1,r3) = %.3f (need > 1)", anti,
                 kAntisymmetry, r2 / (0.5 * (r1 + r3))));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  using Check = void (*)();
  for (Check check : {h_convergence, near_incompressible, k_convergence, temporal_rate, energy, oracle, patch,
                      appendix_a, scenarios}) {
    try {
      check();
    } catch (const std::exception& e) {
      report(false, "error", e.what());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed (%.0f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
