#include "tphdg/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tphdg/error.hpp"

namespace tphdg {

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names = {"u1",  "u2",  "q1",  "q2", "r1",   "r2",
                                                 "sxx", "syy", "sxy", "p",  "theta"};
  return names;
}

}  // namespace

void PointSource::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ConfigError("source.epsilon: must be finite and >= 0 (0 selects h/3)");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw ConfigError("source.frequency: must be finite and > 0");
  if (!std::isfinite(amplitude) || !std::isfinite(delay) || !moment.allFinite() ||
      !std::isfinite(location.x) || !std::isfinite(location.y))
    throw ConfigError("source: non-finite value");
}

double wavelet(const PointSource& src, double t) {
  const double s = t - src.delay;
  const double f = src.frequency;
  return src.amplitude * std::cos(2.0 * kPi * f * s) * std::exp(-2.0 * f * f * s * s);
}

std::array<double, 2> source_profile(const PointSource& src, const Point& x, double eps) {
  const double dx = x.x - src.location.x;
  const double dy = x.y - src.location.y;
  const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * eps * eps)) / (eps * eps);
  const Eigen::Vector2d b(g * dx, g * dy);
  const Eigen::Vector2d mb = src.moment * b;
  return {mb[0], mb[1]};
}

std::array<double, 2> source_field(const PointSource& src, const Point& x, double t, double eps) {
  const double s = wavelet(src, t);
  auto v = source_profile(src, x, eps);
  return {s * v[0], s * v[1]};
}

double onset_time(const PointSource& src, double rel_threshold) {
  const double width =
      std::sqrt(std::log(1.0 / rel_threshold) / (2.0 * src.frequency * src.frequency));
  return src.delay - width;
}

int field_index(const std::string& name) {
  const auto& names = field_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ConfigError("unknown field '" + name +
                      "' (expected u1 u2 q1 q2 r1 r2 sxx syy sxy p theta)");
  return static_cast<int>(it - names.begin());
}

// Receiver -----------------------------------------------------------------------

Receiver::Receiver(std::string id, Point location, std::vector<std::string> fields)
    : id_(std::move(id)), location_(location), fields_(std::move(fields)) {
  for (const auto& f : fields_) index_.push_back(field_index(f));
  samples_.resize(fields_.size());
}

void Receiver::resolve(const Mesh& mesh) {
  const PointLocation loc = locate_point(mesh, location_);
  if (loc.element < 0)
    throw ConfigError("receiver '" + id_ + "' lies outside the mesh");
  element_ = loc.element;
}

void Receiver::record(const Mesh& mesh, const DofLayout& layout, const DiscreteState& state,
                      double t) {
  TPHDG_REQUIRE(element_ >= 0, "Receiver::record: receiver not resolved");
  const auto v = evaluate_state(mesh, layout, state.X, element_, location_);
  times_.push_back(t);
  for (std::size_t i = 0; i < index_.size(); ++i) samples_[i].push_back(v[index_[i]]);
}

const std::vector<double>& Receiver::samples(const std::string& field) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i] == field) return samples_[i];
  throw Error("receiver '" + id_ + "' does not record '" + field + "'");
}

// Configuration ------------------------------------------------------------------

ScenarioConfig ScenarioConfig::desk() {
  ScenarioConfig c;
  c.name = "thermoelastic_homogeneous";
  c.materials[0] = named_parameter_set("L3");
  c.receivers = {Receiver("r1", {750.0, 1125.0}), Receiver("r2", {1015.0, 1015.0}),
                 Receiver("r3", {1125.0, 750.0})};
  c.snapshot_times = {0.2, 0.4};
  return c;
}

ScenarioConfig ScenarioConfig::paper() {
  ScenarioConfig c = desk();
  c.name = "thermoelastic_homogeneous_paper";
  c.nx = c.ny = 30;
  c.k = 7;
  c.T = 0.6;
  c.snapshot_times = {0.2, 0.4, 0.6};
  return c;
}

void ScenarioConfig::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("mesh.nx/mesh.ny: must be >= 1");
  if (k < 0) throw ConfigError("k: must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt: must be finite and > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T: must be finite and > 0");
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta: must lie in (0, 1]");
  if (!(domain.width() > 0.0 && domain.height() > 0.0))
    throw ConfigError("domain: empty rectangle");
  if (!materials.count(0)) throw ConfigError("material: region 0 has no parameter set");
  for (const auto& [tag, p] : materials) {
    if (tag != 0 && tag != 1) throw ConfigError("material: region tags must be 0 or 1");
    p.validate();
  }
  source.validate();
  auto inside = [&](const Point& p) {
    return p.x >= domain.xmin && p.x <= domain.xmax && p.y >= domain.ymin && p.y <= domain.ymax;
  };
  if (!inside(source.location)) throw ConfigError("source.location: outside the domain");
  for (const auto& r : receivers)
    if (!inside(r.location())) throw ConfigError("receiver '" + r.id() + "': outside the domain");
}

MaterialField ScenarioConfig::material_field() const {
  MaterialField mf;
  for (auto [tag, p] : materials) {
    if (!thermal_coupling) {
      p.beta = 0.0;
      p.b0 = 0.0;
    }
    mf.set(tag, p);
  }
  return mf;
}

Mesh ScenarioConfig::build_mesh() const {
  Mesh mesh = build_structured_mesh(nx, ny, domain, split);
  if (materials.count(1)) {
    const double xi = interface_x;
    mesh.assign_regions([xi](const Point& c) { return c.x >= xi ? 1 : 0; });
  }
  return mesh;
}

// Runs ---------------------------------------------------------------------------

ScenarioResult run_scenario(const ScenarioConfig& cfg, const SnapshotWriter& snapshots) {
  cfg.validate();
  ScenarioResult res;
  res.mesh = cfg.build_mesh();
  const Mesh& mesh = res.mesh;
  const MaterialField materials = cfg.material_field();
  {
    const std::set<int> tags(mesh.regions().begin(), mesh.regions().end());
    res.region_tags.assign(tags.begin(), tags.end());
    materials.check_covers(res.region_tags);
  }
  res.layout = DofLayout(cfg.k);

  const double cell = cfg.domain.width() / cfg.nx;
  const double eps = cfg.source.epsilon > 0.0 ? cfg.source.epsilon : cell / 3.0;
  const PointSource src = cfg.source;
  const SpatialSource spatial = [&src, eps](const Point& x, int, double* out) {
    std::fill(out, out + 11, 0.0);
    const auto b = source_profile(src, x, eps);
    out[0] = b[0];
    out[1] = b[1];
  };

  {
    const QuadratureRule rule = quadrature_simplex(cfg.source_quad_order);
    double total = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const ElementGeometry geo(mesh, e);
      for (int q = 0; q < rule.size(); ++q) {
        const Point x = geo.map(rule.points[q][0], rule.points[q][1]);
        const auto b = source_profile(src, x, eps);
        total += rule.weights[q] * geo.det * std::hypot(b[0], b[1]);
      }
    }
    res.source_moment_norm = total;
  }

  ProblemData data;
  data.separable.push_back(
      {[src](double t) { return wavelet(src, t); },
       assemble_spatial_loads(mesh, materials, res.layout, spatial, cfg.source_quad_order)});

  StepperOptions sopt;
  sopt.theta = cfg.theta;
  sopt.assembly = cfg.assembly;
  const TimeGrid grid = TimeGrid::from_target(cfg.T, cfg.dt);
  const Stepper stepper(mesh, materials, cfg.k, grid.dt, std::move(data), sopt);

  std::vector<Receiver> receivers = cfg.receivers;
  for (auto& r : receivers) r.resolve(mesh);

  std::vector<int> snap_steps;
  for (double ts : cfg.snapshot_times) {
    const int n = static_cast<int>(std::lround(ts / grid.dt));
    if (n >= 0 && n <= grid.steps) snap_steps.push_back(n);
  }

  std::vector<Monitor> monitors;
  monitors.push_back([&](int, double t, const DiscreteState& s) {
    for (auto& r : receivers) r.record(mesh, res.layout, s, t);
  });
  if (snapshots) {
    monitors.push_back([&](int n, double t, const DiscreteState& s) {
      if (std::find(snap_steps.begin(), snap_steps.end(), n) != snap_steps.end())
        snapshots(n, t, mesh, s);
    });
  }

  RunResult run_res = run(stepper, DiscreteState(mesh, res.layout), grid, monitors);
  res.state = std::move(run_res.state);
  res.energy = std::move(run_res.energy);
  res.receivers = std::move(receivers);
  return res;
}

ComparisonResult run_comparison(const ScenarioConfig& cfg, const SnapshotWriter& snapshots) {
  ComparisonResult out;
  ScenarioConfig full = cfg;
  full.thermal_coupling = true;
  ScenarioConfig reduced = cfg;
  reduced.thermal_coupling = false;
  out.full = run_scenario(full, snapshots);
  out.reduced = run_scenario(reduced);
  const double dt = TimeGrid::from_target(cfg.T, cfg.dt).dt;
  for (std::size_t i = 0; i < out.full.receivers.size(); ++i) {
    const auto& a = out.full.receivers[i].samples("u2");
    const auto& b = out.reduced.receivers[i].samples("u2");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    out.difference[out.full.receivers[i].id()] = std::sqrt(dt * s);
  }
  return out;
}

double antisymmetry_error(const Mesh& mesh, const DofLayout& layout, const DiscreteState& state,
                          const std::string& field, int samples) {
  const int idx = field_index(field);
  double x0 = mesh.vertex(0).x, x1 = x0, y0 = mesh.vertex(0).y, y1 = y0;
  for (const Point& p : mesh.vertices()) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  auto value = [&](const Point& p) {
    const PointLocation loc = locate_point(mesh, p);
    return evaluate_state(mesh, layout, state.X, loc.element, p)[idx];
  };
  // An even count keeps samples off the centerline itself, where the
  // discontinuous field has two values.
  if (samples % 2) ++samples;
  double peak = 0.0, diff = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = (i + 0.5) / samples;
    for (int j = 0; j < samples; ++j) {
      const double y = y0 + (j + 0.4321) / samples * (y1 - y0);
      const Point a{x0 + s * (x1 - x0), y};
      const Point b{x1 - s * (x1 - x0), y};
      const double va = value(a);
      peak = std::max(peak, std::abs(va));
      diff = std::max(diff, std::abs(va + value(b)));
    }
  }
  return peak > 0.0 ? diff / peak : diff;
}

CausalityReport causality_check(const std::vector<Receiver>& receivers, double window_end) {
  CausalityReport rep;
  rep.window_end = window_end;
  for (const auto& r : receivers) {
    for (std::size_t f = 0; f < r.fields().size(); ++f) {
      const auto& s = r.samples(static_cast<int>(f));
      double peak = 0.0;
      for (double v : s) peak = std::max(peak, std::abs(v));
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (r.times()[j] > window_end) continue;
        ++rep.samples_checked;
        if (peak > 0.0) rep.max_relative = std::max(rep.max_relative, std::abs(s[j]) / peak);
      }
    }
  }
  return rep;
}

}  // namespace tphdg
