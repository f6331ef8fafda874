#include "tphdg/cli_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "tphdg/error.hpp"

namespace tphdg {

namespace {

using Ptree = boost::property_tree::ptree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& path, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(path + ": expected a number, got '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(path + ": value must be finite");
  return v;
}

std::int64_t to_int(const std::string& path, const std::string& text) {
  const std::string s = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(path + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& path, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(path + ": expected true or false, got '" + text + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

struct Key {
  std::function<void(const std::string& path, const std::string& value)> set;
  std::function<std::string()> get;
};

Key number(double& x) {
  return {[&x](const std::string& p, const std::string& v) { x = to_double(p, v); },
          [&x] { return fmt(x); }};
}
Key integer(int& x) {
  return {[&x](const std::string& p, const std::string& v) {
            const auto i = to_int(p, v);
            if (i < -1000000000 || i > 1000000000) throw ConfigError(p + ": out of range");
            x = static_cast<int>(i);
          },
          [&x] { return std::to_string(x); }};
}
Key integer64(std::int64_t& x) {
  return {[&x](const std::string& p, const std::string& v) { x = to_int(p, v); },
          [&x] { return std::to_string(x); }};
}
Key text(std::string& x) {
  return {[&x](const std::string&, const std::string& v) { x = trim(v); }, [&x] { return x; }};
}
Key flag(bool& x) {
  return {[&x](const std::string& p, const std::string& v) { x = to_bool(p, v); },
          [&x] { return std::string(x ? "true" : "false"); }};
}
Key int_list(std::vector<int>& x) {
  return {[&x](const std::string& p, const std::string& v) {
            x.clear();
            for (const auto& s : split_list(v)) {
              const auto i = to_int(p, s);
              if (i < -1000000000 || i > 1000000000) throw ConfigError(p + ": out of range");
              x.push_back(static_cast<int>(i));
            }
          },
          [&x] { return join(x, [](int i) { return std::to_string(i); }); }};
}
Key number_list(std::vector<double>& x) {
  return {[&x](const std::string& p, const std::string& v) {
            x.clear();
            for (const auto& s : split_list(v)) x.push_back(to_double(p, s));
          },
          [&x] { return join(x, fmt); }};
}
Key text_list(std::vector<std::string>& x) {
  return {[&x](const std::string&, const std::string& v) { x = split_list(v); },
          [&x] { return join(x, [](const std::string& s) { return s; }); }};
}

using Section = std::vector<std::pair<std::string, Key>>;

// Fixed sections in emission order.
std::vector<std::pair<std::string, Section>> fixed_sections(RunConfig& c) {
  return {
      {"run", {{"name", text(c.run.name)}}},
      {"domain",
       {{"xmin", number(c.domain.xmin)},
        {"ymin", number(c.domain.ymin)},
        {"xmax", number(c.domain.xmax)},
        {"ymax", number(c.domain.ymax)}}},
      {"mesh",
       {{"nx", integer(c.mesh.nx)},
        {"ny", integer(c.mesh.ny)},
        {"split", text(c.mesh.split)},
        {"jitter", number(c.mesh.jitter)},
        {"seed", integer64(c.mesh.seed)}}},
      {"discretization",
       {{"k", integer(c.discretization.k)},
        {"dt", number(c.discretization.dt)},
        {"T", number(c.discretization.T)},
        {"theta", number(c.discretization.theta)},
        {"policy", text(c.discretization.policy)}}},
      {"study",
       {{"cells", int_list(c.study.cells)},
        {"degrees", int_list(c.study.degrees)},
        {"steps", int_list(c.study.steps)},
        {"ct", number(c.study.ct)},
        {"tol_theta", number(c.study.tol_theta)},
        {"tol_u", number(c.study.tol_u)},
        {"max_ratio", number(c.study.max_ratio)},
        {"rate", number(c.study.rate)},
        {"rate_tol", number(c.study.rate_tol)}}},
      {"source",
       {{"x", number(c.source.x)},
        {"y", number(c.source.y)},
        {"amplitude", number(c.source.amplitude)},
        {"frequency", number(c.source.frequency)},
        {"delay", number(c.source.delay)},
        {"epsilon", number(c.source.epsilon)},
        {"quad_order", integer(c.source.quad_order)}}},
      {"outputs",
       {{"dir", text(c.outputs.dir)},
        {"snapshots", number_list(c.outputs.snapshots)},
        {"vtk", flag(c.outputs.vtk)},
        {"receiver_fields", text_list(c.outputs.receiver_fields)}}},
      {"scenario",
       {{"mode", text(c.scenario.mode)}, {"thermal_coupling", flag(c.scenario.thermal_coupling)}}},
      {"check", {{"suites", text_list(c.check.suites)}, {"energy_steps", integer(c.check.energy_steps)}}},
      {"debug",
       {{"stabilization_sign", number(c.debug.stabilization_sign)},
        {"backward_euler", flag(c.debug.backward_euler)}}},
  };
}

const std::vector<std::pair<std::string, double MaterialParameters::*>>& material_keys() {
  static const std::vector<std::pair<std::string, double MaterialParameters::*>> keys = {
      {"rho_s", &MaterialParameters::rho_s},
      {"rho_f", &MaterialParameters::rho_f},
      {"porosity", &MaterialParameters::porosity},
      {"tortuosity", &MaterialParameters::tortuosity},
      {"eta_over_kappa", &MaterialParameters::eta_over_kappa},
      {"alpha", &MaterialParameters::alpha},
      {"c0", &MaterialParameters::c0},
      {"a0", &MaterialParameters::a0},
      {"b0", &MaterialParameters::b0},
      {"beta", &MaterialParameters::beta},
      {"chi", &MaterialParameters::chi},
      {"tau", &MaterialParameters::tau},
      {"mu", &MaterialParameters::mu},
      {"lambda", &MaterialParameters::lambda},
  };
  return keys;
}

void parse_material(const std::string& section, const Ptree& tree, MaterialSpec& spec,
                    double* interface_x) {
  for (const auto& [key, node] : tree) {
    const std::string path = section + "." + key;
    if (!node.empty()) throw ConfigError(path + ": nested keys are not allowed");
    const std::string value = node.data();
    if (key == "set") {
      spec.set = trim(value);
    } else if (key == "interface_x" && interface_x) {
      *interface_x = to_double(path, value);
    } else {
      const auto& mk = material_keys();
      const bool known = std::any_of(mk.begin(), mk.end(), [&](const auto& m) { return m.first == key; });
      if (!known) throw ConfigError(path + ": unknown key");
      spec.overrides[key] = to_double(path, value);
    }
  }
  try {
    spec.resolve();
  } catch (const ConfigError& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

void check_choice(const std::string& path, const std::string& v,
                  std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string msg = path + ": '" + v + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg);
}

void validate(const RunConfig& c) {
  check_choice("mesh.split", c.mesh.split, {"diagonal", "crisscross"});
  check_choice("discretization.policy", c.discretization.policy, {"serial", "parallel"});
  check_choice("scenario.mode", c.scenario.mode, {"single", "compare"});
  if (c.mesh.nx < 1 || c.mesh.ny < 1) throw ConfigError("mesh.nx/mesh.ny: must be >= 1");
  if (c.mesh.jitter < 0.0 || c.mesh.jitter > 0.15) throw ConfigError("mesh.jitter: must lie in [0, 0.15]");
  if (c.mesh.seed < 0) throw ConfigError("mesh.seed: must be >= 0");
  if (!(c.domain.xmax > c.domain.xmin && c.domain.ymax > c.domain.ymin))
    throw ConfigError("domain: xmax > xmin and ymax > ymin required");
  if (c.discretization.k < 0 || c.discretization.k > 12) throw ConfigError("discretization.k: must lie in [0, 12]");
  if (!(c.discretization.dt > 0.0)) throw ConfigError("discretization.dt: must be > 0");
  if (!(c.discretization.T > 0.0)) throw ConfigError("discretization.T: must be > 0");
  if (!(c.discretization.theta > 0.0 && c.discretization.theta <= 1.0))
    throw ConfigError("discretization.theta: must lie in (0, 1]");
  for (int n : c.study.cells)
    if (n < 1) throw ConfigError("study.cells: entries must be >= 1");
  for (int k : c.study.degrees)
    if (k < 0 || k > 12) throw ConfigError("study.degrees: entries must lie in [0, 12]");
  for (int s : c.study.steps)
    if (s < 1) throw ConfigError("study.steps: entries must be >= 1");
  if (!(c.study.ct > 0.0)) throw ConfigError("study.ct: must be > 0");
  if (c.source.quad_order < 1) throw ConfigError("source.quad_order: must be >= 1");
  if (!(c.source.frequency > 0.0)) throw ConfigError("source.frequency: must be > 0");
  if (c.source.epsilon < 0.0) throw ConfigError("source.epsilon: must be >= 0");
  for (double t : c.outputs.snapshots)
    if (t < 0.0) throw ConfigError("outputs.snapshots: times must be >= 0");
  for (const auto& f : c.outputs.receiver_fields) {
    try {
      field_index(f);
    } catch (const Error&) {
      throw ConfigError("outputs.receiver_fields: unknown field '" + f + "'");
    }
  }
  for (const auto& s : c.check.suites)
    check_choice("check.suites", s, {"patch", "oracle", "trace", "energy"});
  if (c.check.energy_steps < 1) throw ConfigError("check.energy_steps: must be >= 1");
  if (c.debug.stabilization_sign != 1.0 && c.debug.stabilization_sign != -1.0)
    throw ConfigError("debug.stabilization_sign: must be 1 or -1");
  std::set<std::string> ids;
  for (const auto& r : c.receivers) {
    if (!ids.insert(r.id).second) throw ConfigError("receivers." + r.id + ": duplicate id");
    if (r.x < c.domain.xmin || r.x > c.domain.xmax || r.y < c.domain.ymin || r.y > c.domain.ymax)
      throw ConfigError("receivers." + r.id + ": outside the domain");
  }
}

}  // namespace

MaterialParameters MaterialSpec::resolve() const {
  MaterialParameters p;
  try {
    p = named_parameter_set(set);
  } catch (const Error&) {
    std::string known;
    for (const auto& n : named_parameter_sets()) known += " " + n;
    throw ConfigError("set: unknown parameter set '" + set + "' (known:" + known + ")");
  }
  for (const auto& [key, value] : overrides) {
    const auto& mk = material_keys();
    const auto it = std::find_if(mk.begin(), mk.end(), [&](const auto& m) { return m.first == key; });
    if (it == mk.end()) throw ConfigError(key + ": unknown material key");
    p.*(it->second) = value;
  }
  p.validate();
  return p;
}

RunConfig parse_run_config(std::istream& is, const std::string& origin) {
  Ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  RunConfig c;
  auto sections = fixed_sections(c);
  for (const auto& [name, node] : tree) {
    if (node.empty() && !node.data().empty())
      throw ConfigError(name + ": key outside of a section");
    if (name == "material") {
      parse_material(name, node, c.material, nullptr);
      continue;
    }
    if (name == "material_right") {
      c.material_right.emplace();
      parse_material(name, node, *c.material_right, &c.interface_x);
      continue;
    }
    if (name == "receivers") {
      for (const auto& [id, rnode] : node) {
        const std::string path = "receivers." + id;
        const auto xy = split_list(rnode.data());
        if (xy.size() != 2) throw ConfigError(path + ": expected 'x, y'");
        c.receivers.push_back({id, to_double(path, xy[0]), to_double(path, xy[1])});
      }
      continue;
    }
    const auto sec = std::find_if(sections.begin(), sections.end(),
                                  [&](const auto& s) { return s.first == name; });
    if (sec == sections.end()) throw ConfigError(name + ": unknown section");
    for (const auto& [key, knode] : node) {
      const std::string path = name + "." + key;
      const auto it = std::find_if(sec->second.begin(), sec->second.end(),
                                   [&](const auto& k) { return k.first == key; });
      if (it == sec->second.end()) throw ConfigError(path + ": unknown key");
      it->second.set(path, knode.data());
    }
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return parse_run_config(in, path);
}

void write_run_config(std::ostream& os, const RunConfig& cfg) {
  RunConfig c = cfg;
  bool first = true;
  auto header = [&](const std::string& name) {
    if (!first) os << "\n";
    first = false;
    os << "[" << name << "]\n";
  };
  auto material = [&](const std::string& name, const MaterialSpec& m, const double* xi) {
    header(name);
    os << "set = " << m.set << "\n";
    if (xi) os << "interface_x = " << fmt(*xi) << "\n";
    for (const auto& [k, v] : m.overrides) os << k << " = " << fmt(v) << "\n";
  };
  for (auto& [name, keys] : fixed_sections(c)) {
    header(name);
    for (auto& [key, k] : keys) os << key << " = " << k.get() << "\n";
    if (name == "discretization") {
      material("material", c.material, nullptr);
      if (c.material_right) material("material_right", *c.material_right, &c.interface_x);
    }
  }
  if (!c.receivers.empty()) {
    header("receivers");
    for (const auto& r : c.receivers) os << r.id << " = " << fmt(r.x) << ", " << fmt(r.y) << "\n";
  }
}

// Conversions ---------------------------------------------------------------------

MaterialField material_field(const RunConfig& cfg) {
  MaterialField mf(cfg.material.resolve());
  if (cfg.material_right) mf.set(1, cfg.material_right->resolve());
  return mf;
}

Mesh build_mesh(const RunConfig& cfg) {
  const Rectangle dom{cfg.domain.xmin, cfg.domain.ymin, cfg.domain.xmax, cfg.domain.ymax};
  Mesh mesh = build_structured_mesh(cfg.mesh.nx, cfg.mesh.ny, dom, parse_split_pattern(cfg.mesh.split),
                                    cfg.mesh.jitter, static_cast<std::uint64_t>(cfg.mesh.seed));
  if (cfg.material_right) {
    const double xi = cfg.interface_x;
    mesh.assign_regions([xi](const Point& c) { return c.x >= xi ? 1 : 0; });
  }
  return mesh;
}

static AssemblyOptions assembly_options(const RunConfig& cfg) {
  AssemblyOptions a;
  a.policy = cfg.discretization.policy == "serial" ? ExecutionPolicy::serial : ExecutionPolicy::parallel;
  a.stabilization_sign = cfg.debug.stabilization_sign;
  return a;
}

static double effective_theta(const RunConfig& cfg) {
  return cfg.debug.backward_euler ? 1.0 : cfg.discretization.theta;
}

StepperOptions stepper_options(const RunConfig& cfg) {
  StepperOptions s;
  s.theta = effective_theta(cfg);
  s.assembly = assembly_options(cfg);
  return s;
}

MmsOptions mms_options(const RunConfig& cfg) {
  MmsOptions o;
  o.material = cfg.material.resolve();
  o.T = cfg.discretization.T;
  o.theta = effective_theta(cfg);
  o.assembly = assembly_options(cfg);
  o.split = parse_split_pattern(cfg.mesh.split);
  o.jitter = cfg.mesh.jitter;
  o.seed = static_cast<std::uint64_t>(cfg.mesh.seed);
  return o;
}

ScenarioConfig scenario_config(const RunConfig& cfg) {
  ScenarioConfig s;
  s.name = cfg.run.name;
  s.domain = {cfg.domain.xmin, cfg.domain.ymin, cfg.domain.xmax, cfg.domain.ymax};
  s.nx = cfg.mesh.nx;
  s.ny = cfg.mesh.ny;
  s.split = parse_split_pattern(cfg.mesh.split);
  s.k = cfg.discretization.k;
  s.dt = cfg.discretization.dt;
  s.T = cfg.discretization.T;
  s.theta = effective_theta(cfg);
  s.materials[0] = cfg.material.resolve();
  if (cfg.material_right) s.materials[1] = cfg.material_right->resolve();
  s.interface_x = cfg.interface_x;
  s.source.location = {cfg.source.x, cfg.source.y};
  s.source.amplitude = cfg.source.amplitude;
  s.source.frequency = cfg.source.frequency;
  s.source.delay = cfg.source.delay;
  s.source.epsilon = cfg.source.epsilon;
  s.source_quad_order = cfg.source.quad_order;
  std::vector<std::string> fields = cfg.outputs.receiver_fields;
  if (cfg.scenario.mode == "compare" && std::find(fields.begin(), fields.end(), "u2") == fields.end())
    fields.push_back("u2");
  s.receivers.clear();
  for (const auto& r : cfg.receivers) s.receivers.emplace_back(r.id, Point{r.x, r.y}, fields);
  s.snapshot_times = cfg.outputs.vtk ? cfg.outputs.snapshots : std::vector<double>{};
  s.thermal_coupling = cfg.scenario.thermal_coupling;
  s.assembly = assembly_options(cfg);
  return s;
}

std::string resolve_output_dir(const RunConfig& cfg, const std::string& cli_override) {
  if (!cli_override.empty()) return cli_override;
  if (const char* env = std::getenv("TPHDG_OUTPUT_DIR"); env && *env) return env;
  return cfg.outputs.dir;
}

// Writers -------------------------------------------------------------------------

void write_seismograms_csv(std::ostream& os, const std::vector<Receiver>& receivers) {
  os << "t,receiver_id,field,value\n";
  for (const auto& r : receivers)
    for (std::size_t f = 0; f < r.fields().size(); ++f) {
      const auto& v = r.samples(static_cast<int>(f));
      for (std::size_t i = 0; i < v.size(); ++i)
        os << fmt(r.times()[i]) << ',' << r.id() << ',' << r.fields()[f] << ',' << fmt(v[i]) << '\n';
    }
}

void write_difference_csv(std::ostream& os, const Receiver& full, const Receiver& reduced) {
  TPHDG_REQUIRE(full.times().size() == reduced.times().size(),
                "write_difference_csv: receivers have different sample counts");
  os << "t,field,full,reduced,difference\n";
  for (std::size_t f = 0; f < full.fields().size(); ++f) {
    const std::string& name = full.fields()[f];
    const auto& a = full.samples(static_cast<int>(f));
    const auto& b = reduced.samples(name);
    for (std::size_t i = 0; i < a.size(); ++i)
      os << fmt(full.times()[i]) << ',' << name << ',' << fmt(a[i]) << ',' << fmt(b[i]) << ','
         << fmt(a[i] - b[i]) << '\n';
  }
}

void write_vtk(std::ostream& os, const Mesh& mesh, const DofLayout& layout,
               const DiscreteState& state, double t) {
  const int ne = mesh.num_elements();
  const int np = 3 * ne;
  std::vector<std::array<double, 11>> values(np);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 3; ++i)
      values[3 * e + i] = evaluate_state(mesh, layout, state.X, e, mesh.vertex(mesh.triangle(e)[i]));

  os << "# vtk DataFile Version 3.0\n";
  os << "tphdg t=" << fmt(t) << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << np << " double\n";
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 3; ++i) {
      const Point& p = mesh.vertex(mesh.triangle(e)[i]);
      os << fmt(p.x) << ' ' << fmt(p.y) << " 0\n";
    }
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (int e = 0; e < ne; ++e) os << "3 " << 3 * e << ' ' << 3 * e + 1 << ' ' << 3 * e + 2 << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) os << "5\n";

  os << "POINT_DATA " << np << '\n';
  auto scalars = [&](const char* name, auto&& f) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (const auto& v : values) os << fmt(f(v)) << '\n';
  };
  scalars("u_mag", [](const auto& v) { return std::hypot(v[0], v[1]); });
  scalars("u2", [](const auto& v) { return v[1]; });
  scalars("r_mag", [](const auto& v) { return std::hypot(v[4], v[5]); });
  scalars("theta", [](const auto& v) { return v[10]; });

  os << "CELL_DATA " << ne << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < ne; ++e) os << mesh.region(e) << '\n';
}

VtkSummary validate_vtk(std::istream& is) {
  auto fail = [](const std::string& msg) { throw Error("invalid VTK file: " + msg); };
  std::string line;
  if (!std::getline(is, line) || line.rfind("# vtk DataFile Version", 0) != 0) fail("missing version line");
  if (!std::getline(is, line)) fail("missing title line");
  std::string word;
  auto expect = [&](const std::string& w) {
    if (!(is >> word) || word != w) fail("expected '" + w + "', got '" + word + "'");
  };
  auto count = [&]() {
    long n = -1;
    if (!(is >> n) || n < 0) fail("bad count");
    return n;
  };
  expect("ASCII");
  expect("DATASET");
  expect("UNSTRUCTURED_GRID");
  expect("POINTS");
  VtkSummary s;
  s.points = static_cast<int>(count());
  is >> word;
  for (long i = 0; i < 3L * s.points; ++i) {
    double x;
    if (!(is >> x) || !std::isfinite(x)) fail("bad point coordinate");
  }
  expect("CELLS");
  s.cells = static_cast<int>(count());
  const long size = count();
  long read = 0;
  for (int c = 0; c < s.cells; ++c) {
    const long nv = count();
    read += nv + 1;
    for (long j = 0; j < nv; ++j) {
      const long v = count();
      if (v >= s.points) fail("cell references point " + std::to_string(v));
    }
  }
  if (read != size) fail("CELLS size mismatch");
  expect("CELL_TYPES");
  if (count() != s.cells) fail("CELL_TYPES count mismatch");
  for (int c = 0; c < s.cells; ++c)
    if (count() != 5) fail("non-triangle cell type");

  long block = 0;
  while (is >> word) {
    if (word == "POINT_DATA" || word == "CELL_DATA") {
      block = count();
      if (block != (word == "POINT_DATA" ? s.points : s.cells)) fail(word + " count mismatch");
      continue;
    }
    if (word != "SCALARS") fail("unexpected token '" + word + "'");
    if (block == 0) fail("SCALARS outside a data block");
    std::string name, type;
    int ncomp = 0;
    is >> name >> type >> ncomp;
    if (ncomp != 1) fail("only single-component scalars expected");
    expect("LOOKUP_TABLE");
    is >> word;
    for (long i = 0; i < block; ++i) {
      double v;
      if (!(is >> v) || !std::isfinite(v)) fail("bad value in '" + name + "'");
    }
    s.fields.push_back(name);
  }
  return s;
}

}  // namespace tphdg
