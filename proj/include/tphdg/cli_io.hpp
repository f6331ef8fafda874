// Run configuration files, CSV/VTK output and the command implementations
// behind the tphdg executable.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tphdg/scenarios.hpp"
#include "tphdg/verify.hpp"

namespace tphdg {

/// Named parameter set plus per-key overrides (keys are MaterialParameters
/// field names, e.g. "mu" or "eta_over_kappa").
struct MaterialSpec {
  std::string set = "L1";
  std::map<std::string, double> overrides;

  MaterialParameters resolve() const;
  bool operator==(const MaterialSpec&) const = default;
};

struct ReceiverSpec {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const ReceiverSpec&) const = default;
};

/// Contents of one configuration file. Sections and keys mirror the INI
/// layout; see configs/README.md for the grammar.
struct RunConfig {
  struct Run {
    std::string name = "run";
    bool operator==(const Run&) const = default;
  } run;
  struct Domain {
    double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;
    bool operator==(const Domain&) const = default;
  } domain;
  struct MeshSpec {
    int nx = 4, ny = 4;
    std::string split = "diagonal";
    double jitter = 0.0;
    std::int64_t seed = 0;
    bool operator==(const MeshSpec&) const = default;
  } mesh;
  struct Discretization {
    int k = 1;
    double dt = 1e-2;
    double T = 0.5;
    double theta = 0.5;
    std::string policy = "parallel";
    bool operator==(const Discretization&) const = default;
  } discretization;
  MaterialSpec material;
  std::optional<MaterialSpec> material_right;  // region x >= interface_x
  double interface_x = 0.5;
  struct Study {
    std::vector<int> cells{4, 8, 16};
    std::vector<int> degrees{1, 2, 3, 4};
    std::vector<int> steps{8, 16, 32, 64, 128};
    double ct = 0.25;
    double tol_theta = 0.15;
    double tol_u = 0.2;
    double max_ratio = 1e-2;
    double rate = 2.0;
    double rate_tol = 0.1;
    bool operator==(const Study&) const = default;
  } study;
  struct Source {
    double x = 750.0, y = 750.0;
    double amplitude = 10.0, frequency = 5.0, delay = 0.3, epsilon = 0.0;
    int quad_order = 41;
    bool operator==(const Source&) const = default;
  } source;
  std::vector<ReceiverSpec> receivers;
  struct Outputs {
    std::string dir = "output";
    std::vector<double> snapshots;
    bool vtk = true;
    std::vector<std::string> receiver_fields{"u2", "q2"};
    bool operator==(const Outputs&) const = default;
  } outputs;
  struct Scenario {
    std::string mode = "single";  // single | compare
    bool thermal_coupling = true;
    bool operator==(const Scenario&) const = default;
  } scenario;
  struct Check {
    std::vector<std::string> suites{"patch", "oracle", "trace", "energy"};
    int energy_steps = 200;
    bool operator==(const Check&) const = default;
  } check;
  struct Debug {
    double stabilization_sign = 1.0;
    bool backward_euler = false;
    bool operator==(const Debug&) const = default;
  } debug;

  bool operator==(const RunConfig&) const = default;
};

/// Parses INI text. Throws ConfigError naming the offending key path
/// ("section.key") for unknown keys, malformed or non-finite values.
RunConfig parse_run_config(std::istream& is, const std::string& origin = "<stream>");
RunConfig load_run_config(const std::string& path);
/// Emits every key; parse(emit(c)) == c.
void write_run_config(std::ostream& os, const RunConfig& cfg);

MaterialField material_field(const RunConfig& cfg);
Mesh build_mesh(const RunConfig& cfg);
StepperOptions stepper_options(const RunConfig& cfg);
MmsOptions mms_options(const RunConfig& cfg);
ScenarioConfig scenario_config(const RunConfig& cfg);

/// Precedence: explicit override, then $TPHDG_OUTPUT_DIR, then outputs.dir.
std::string resolve_output_dir(const RunConfig& cfg, const std::string& cli_override = {});

// Writers -------------------------------------------------------------------------

/// Header t,receiver_id,field,value; 17 significant digits.
void write_seismograms_csv(std::ostream& os, const std::vector<Receiver>& receivers);
/// Header t,field,full,reduced,difference for one receiver pair.
void write_difference_csv(std::ostream& os, const Receiver& full, const Receiver& reduced);

/// Legacy ASCII unstructured grid. Vertices are duplicated per element so the
/// discontinuous fields u_mag, u2, r_mag and theta are exact at the nodes.
void write_vtk(std::ostream& os, const Mesh& mesh, const DofLayout& layout,
               const DiscreteState& state, double t);

struct VtkSummary {
  int points = 0;
  int cells = 0;
  std::vector<std::string> fields;
};
/// Structural validation of a file written by write_vtk; throws Error.
VtkSummary validate_vtk(std::istream& is);

// Commands ------------------------------------------------------------------------

enum ExitCode : int { kExitOk = 0, kExitNumerical = 1, kExitConfig = 2 };

struct CommandContext {
  std::string output_dir;  // created on demand
  std::ostream* log = nullptr;
};

int cmd_mms_h(const RunConfig& cfg, const CommandContext& ctx);
int cmd_mms_k(const RunConfig& cfg, const CommandContext& ctx);
int cmd_mms_dt(const RunConfig& cfg, const CommandContext& ctx);
int cmd_simulate(const RunConfig& cfg, const CommandContext& ctx);
int cmd_check(const RunConfig& cfg, const CommandContext& ctx);

/// Dry-run summary: the resolved configuration and derived material values.
void describe(std::ostream& os, const RunConfig& cfg);

}  // namespace tphdg
