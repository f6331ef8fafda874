#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "tphdg/cli_io.hpp"
#include "tphdg/error.hpp"

namespace tphdg {

namespace {

namespace fs = std::filesystem;

// Pinned acceptance thresholds for commands that do not read them from a study.
constexpr double kSimulateEnergyTolerance = 1e-9;
constexpr double kPatchTolerance = 1e-10;
constexpr int kPatchSteps = 10;
constexpr double kOracleTolerance = 1e-10;
constexpr double kEnergyResidualTolerance = 1e-11;
constexpr double kEnergyIncreaseTolerance = 1e-12;
constexpr int kTraceLevels = 2;
constexpr double kTraceSpread = 2.0;
constexpr int kTraceMaxDegree = 4;

std::ostream& out(const CommandContext& ctx) { return ctx.log ? *ctx.log : std::cout; }

fs::path output_path(const CommandContext& ctx, const std::string& file) {
  const fs::path dir = ctx.output_dir.empty() ? fs::path("output") : fs::path(ctx.output_dir);
  fs::create_directories(dir);
  return dir / file;
}

std::ofstream open_output(const CommandContext& ctx, const std::string& file) {
  const fs::path p = output_path(ctx, file);
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

void report_table(const CommandContext& ctx, const ConvergenceTable& table, const std::string& file) {
  auto f = open_output(ctx, file);
  table.write_csv(f);
  table.write_csv(out(ctx));
}

}  // namespace

int cmd_mms_h(const RunConfig& cfg, const CommandContext& ctx) {
  const int k = cfg.discretization.k;
  if (cfg.study.cells.size() < 2) throw ConfigError("study.cells: need at least two meshes");
  const ConvergenceTable table = converge_h(k, cfg.study.cells, mms_options(cfg), cfg.study.ct);
  report_table(ctx, table, cfg.run.name + "_mms_h.csv");
  const auto& last = table.rows.back();
  const double need_theta = k + 1 - cfg.study.tol_theta;
  const double need_u = k + 2 - cfg.study.tol_u;
  const bool ok = last.rate_theta >= need_theta && last.rate_u >= need_u;
  out(ctx) << verdict(ok) << " mms-h k=" << k << ": finest rates " << last.rate_theta << " / "
           << last.rate_u << " (need >= " << need_theta << " / " << need_u << ")\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_mms_k(const RunConfig& cfg, const CommandContext& ctx) {
  if (cfg.study.degrees.size() < 2) throw ConfigError("study.degrees: need at least two degrees");
  const ConvergenceTable table =
      converge_k(cfg.mesh.nx, cfg.study.degrees, cfg.discretization.dt, mms_options(cfg));
  report_table(ctx, table, cfg.run.name + "_mms_k.csv");
  bool decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    decreasing = decreasing && table.rows[i].e_theta < table.rows[i - 1].e_theta &&
                 table.rows[i].e_u < table.rows[i - 1].e_u;
  const auto& a = table.rows.front();
  const auto& b = table.rows.back();
  const double ratio = std::max(b.e_theta / a.e_theta, b.e_u / a.e_u);
  const bool ok = decreasing && ratio <= cfg.study.max_ratio;
  out(ctx) << verdict(ok) << " mms-k: strictly decreasing=" << (decreasing ? "yes" : "no")
           << ", last/first error ratio " << ratio << " (need <= " << cfg.study.max_ratio << ")\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_mms_dt(const RunConfig& cfg, const CommandContext& ctx) {
  if (cfg.study.steps.size() < 2) throw ConfigError("study.steps: need at least two step counts");
  const ConvergenceTable table =
      converge_dt(cfg.mesh.nx, cfg.discretization.k, cfg.study.steps, mms_options(cfg));
  report_table(ctx, table, cfg.run.name + "_mms_dt.csv");
  const auto& last = table.rows.back();
  const bool ok = std::abs(last.rate_theta - cfg.study.rate) <= cfg.study.rate_tol &&
                  std::abs(last.rate_u - cfg.study.rate) <= cfg.study.rate_tol;
  out(ctx) << verdict(ok) << " mms-dt: finest rates " << last.rate_theta << " / " << last.rate_u
           << " (need " << cfg.study.rate << " +- " << cfg.study.rate_tol << ")\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_simulate(const RunConfig& cfg, const CommandContext& ctx) {
  const ScenarioConfig sc = scenario_config(cfg);
  sc.validate();
  auto snapshot_writer = [&](const std::string& tag) -> SnapshotWriter {
    if (!cfg.outputs.vtk) return {};
    return [&ctx, tag](int step, double t, const Mesh& mesh, const DiscreteState& s) {
      char name[64];
      std::snprintf(name, sizeof name, "_%05d.vtk", step);
      auto f = open_output(ctx, tag + name);
      write_vtk(f, mesh, s.layout, s, t);
    };
  };

  auto energy_ok = [&](const EnergyReport& e, const std::string& label) {
    const double r = e.max_relative_residual();
    double a = 0.0;
    for (const auto& row : e.rows) a = std::max(a, std::abs(row.residual));
    const bool ok = std::isfinite(r) && std::isfinite(a) && r <= kSimulateEnergyTolerance &&
                    a <= kSimulateEnergyTolerance;
    out(ctx) << verdict(ok) << " " << label << ": max energy residual " << a << " (relative " << r
             << ")\n";
    return ok;
  };

  bool ok = true;
  if (cfg.scenario.mode == "compare") {
    const ComparisonResult res = run_comparison(sc, snapshot_writer(cfg.run.name + "_full"));
    {
      auto f = open_output(ctx, cfg.run.name + "_seismograms_full.csv");
      write_seismograms_csv(f, res.full.receivers);
    }
    {
      auto f = open_output(ctx, cfg.run.name + "_seismograms_reduced.csv");
      write_seismograms_csv(f, res.reduced.receivers);
    }
    for (std::size_t i = 0; i < res.full.receivers.size(); ++i) {
      auto f = open_output(ctx, cfg.run.name + "_difference_" + res.full.receivers[i].id() + ".csv");
      write_difference_csv(f, res.full.receivers[i], res.reduced.receivers[i]);
    }
    {
      auto f = open_output(ctx, cfg.run.name + "_difference_norms.csv");
      f << "receiver_id,l2_time_difference_u2\n" << std::setprecision(17);
      for (const auto& [id, d] : res.difference) {
        f << id << ',' << d << '\n';
        out(ctx) << "receiver " << id << ": L2-in-time u2 difference " << d << "\n";
      }
    }
    {
      auto f = open_output(ctx, cfg.run.name + "_energy_full.csv");
      res.full.energy.write_csv(f);
      auto g = open_output(ctx, cfg.run.name + "_energy_reduced.csv");
      res.reduced.energy.write_csv(g);
    }
    ok = energy_ok(res.full.energy, "full model") && ok;
    ok = energy_ok(res.reduced.energy, "reduced model") && ok;
  } else {
    const ScenarioResult res = run_scenario(sc, snapshot_writer(cfg.run.name));
    {
      auto f = open_output(ctx, cfg.run.name + "_seismograms.csv");
      write_seismograms_csv(f, res.receivers);
    }
    {
      auto f = open_output(ctx, cfg.run.name + "_energy.csv");
      res.energy.write_csv(f);
    }
    out(ctx) << "elements " << res.mesh.num_elements() << ", region tags";
    for (int t : res.region_tags) out(ctx) << ' ' << t;
    out(ctx) << ", steps " << res.energy.rows.size() << "\n";
    ok = energy_ok(res.energy, "simulate");
  }
  return ok ? kExitOk : kExitNumerical;
}

int cmd_check(const RunConfig& cfg, const CommandContext& ctx) {
  const Mesh mesh = build_mesh(cfg);
  const MaterialField materials = material_field(cfg);
  materials.check_covers(mesh.regions());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.mesh.seed);
  bool all = true;

  for (const auto& suite : cfg.check.suites) {
    if (suite == "patch") {
      for (int k : cfg.study.degrees) {
        auto sol = std::make_shared<PolynomialSolution>(k + 1, k, seed + 11);
        const PatchResult r = patch_test(mesh, k, materials, sol, kPatchSteps, cfg.discretization.dt, kPatchTolerance);
        out(ctx) << verdict(r.passed) << " patch k=" << k << ": max relative error "
                 << r.max_relative_error << "\n";
        all = all && r.passed;
      }
    } else if (suite == "oracle") {
      const auto sol = std::make_shared<ManufacturedSolution>(cfg.material.resolve());
      const ProblemData data = manufactured_problem(sol, materials);
      AssemblyOptions aopt = stepper_options(cfg).assembly;
      for (int k : cfg.study.degrees) {
        const DofLayout layout(k);
        const DiscreteState init = random_state(mesh, layout, seed + 23);
        const OracleResult r =
            oracle_monolithic(mesh, k, materials, init, data, 0.1, cfg.discretization.dt, aopt);
        const bool ok = r.max_relative_difference <= kOracleTolerance;
        out(ctx) << verdict(ok) << " oracle k=" << k << ": condensed vs monolithic "
                 << r.max_relative_difference << "\n";
        all = all && ok;
      }
    } else if (suite == "trace") {
      std::vector<Mesh> meshes{mesh};
      for (int l = 1; l < kTraceLevels; ++l) meshes.push_back(refine_uniform(meshes.back()));
      for (int l = 0; l <= kTraceMaxDegree; ++l) {
        double lo = INFINITY, hi = 0.0;
        for (const Mesh& m : meshes) {
          const double ratio = trace_inequality_ratio(m, l, 20, seed + l);
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
        }
        const bool ok = hi <= kTraceSpread * lo;
        out(ctx) << verdict(ok) << " trace l=" << l << ": ratio in [" << lo << ", " << hi
                 << "] over " << meshes.size() << " levels\n";
        all = all && ok;
      }
    } else if (suite == "energy") {
      const TimeGrid grid = TimeGrid::from_target(cfg.discretization.T, cfg.discretization.dt);
      EnergyCheck r;
      try {
        r = free_decay(mesh, cfg.discretization.k, materials, cfg.check.energy_steps, grid.dt,
                       seed + 37, stepper_options(cfg));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        out(ctx) << "FAIL energy: " << e.what() << "\n";
        all = false;
        continue;
      }
      const bool ok = r.max_relative_residual <= kEnergyResidualTolerance &&
                      r.max_increase <= kEnergyIncreaseTolerance;
      out(ctx) << verdict(ok) << " energy: " << cfg.check.energy_steps << " steps, residual "
               << r.max_relative_residual << ", largest increase " << r.max_increase << "\n";
      {
        auto f = open_output(ctx, cfg.run.name + "_energy.csv");
        r.report.write_csv(f);
      }
      all = all && ok;
    }
  }
  return all ? kExitOk : kExitNumerical;
}

void describe(std::ostream& os, const RunConfig& cfg) {
  write_run_config(os, cfg);
  auto derived = [&](const std::string& label, const MaterialParameters& p) {
    const SpectralBounds b = spectral_bounds(derive_matrices(p));
    os << "# " << label << ": rho = " << p.rho() << ", rho_w = " << p.rho_w()
       << ", spec(R) = [" << b.rho_min << ", " << b.rho_max << "], spec(Q) = [" << b.q_min << ", "
       << b.q_max << "]\n";
  };
  os << "\n";
  derived("material", cfg.material.resolve());
  if (cfg.material_right) derived("material_right", cfg.material_right->resolve());
  const TimeGrid grid = TimeGrid::from_target(cfg.discretization.T, cfg.discretization.dt);
  os << "# time grid: " << grid.steps << " steps of " << grid.dt << "\n";
}

}  // namespace tphdg
