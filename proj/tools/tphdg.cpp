// tphdg: convergence studies, wave simulations and self-checks from a config file.
#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "tphdg/cli_io.hpp"
#include "tphdg/error.hpp"
#include "tphdg/parallel.hpp"

using namespace tphdg;

int main(int argc, char** argv) {
  CLI::App app{"HDG solver for dynamic linear thermo-poroelasticity"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool dry_run = false;
  int threads = 0;

  using Command = int (*)(const RunConfig&, const CommandContext&);
  const std::pair<const char*, Command> commands[] = {
      {"mms-h", cmd_mms_h},   {"mms-k", cmd_mms_k}, {"mms-dt", cmd_mms_dt},
      {"simulate", cmd_simulate}, {"check", cmd_check},
  };
  const char* help[] = {
      "spatial convergence study with the manufactured solution",
      "polynomial-degree convergence study",
      "time-step convergence study",
      "point-source wave simulation (single or compare mode)",
      "patch, oracle, trace-inequality and energy self-checks",
  };
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 5; ++i) {
    CLI::App* s = app.add_subcommand(commands[i].first, help[i]);
    s->add_option("-c,--config", config_path, "configuration file")->required();
    s->add_flag("--dry-run", dry_run, "print the resolved configuration and exit");
    s->add_option("--threads", threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
    s->add_option("--out", out_dir, "output directory (overrides TPHDG_OUTPUT_DIR and outputs.dir)");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (dry_run) {
    describe(std::cout, cfg);
    std::cout << "# output directory: " << resolve_output_dir(cfg, out_dir) << "\n";
    return kExitOk;
  }
  set_threads(threads);

  CommandContext ctx;
  ctx.output_dir = resolve_output_dir(cfg, out_dir);
  for (int i = 0; i < 5; ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return commands[i].second(cfg, ctx);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitNumerical;
    }
  }
  return kExitConfig;
}
