// Wave-propagation experiments driven by a regularized shear point source.
#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tphdg/hdg.hpp"
#include "tphdg/timeloop.hpp"

namespace tphdg {

struct PointSource {
  Point location{750.0, 750.0};
  double amplitude = 10.0;  // A0
  double frequency = 5.0;   // f0 (Hz)
  double delay = 0.3;       // t0 (s)
  double epsilon = 0.0;     // smoothing width; 0 means h/3
  Eigen::Matrix2d moment = (Eigen::Matrix2d() << 0.0, 1.0, 1.0, 0.0).finished();

  /// Throws ConfigError on a non-positive width or non-finite entries.
  void validate() const;
};

/// S(t) = A0 cos(2 pi f0 (t - t0)) exp(-2 f0^2 (t - t0)^2).
double wavelet(const PointSource& src, double t);

/// Regularized spatial profile M b(x) with
/// b(x) = eps^{-2} exp(-|x - x_s|^2 / (2 eps^2)) (x - x_s).
std::array<double, 2> source_profile(const PointSource& src, const Point& x, double eps);

/// Body force S(t) M b(x).
std::array<double, 2> source_field(const PointSource& src, const Point& x, double t, double eps);

/// Last time before which |S| stays below rel_threshold * A0, or a negative
/// value when the wavelet already exceeds it at t = 0.
double onset_time(const PointSource& src, double rel_threshold = 1e-8);

/// Field names understood by receivers and snapshots: u1 u2 q1 q2 r1 r2 sxx
/// syy sxy p theta. Returns the index into evaluate_state output.
int field_index(const std::string& name);

class Receiver {
 public:
  Receiver() = default;
  Receiver(std::string id, Point location, std::vector<std::string> fields = {"u2", "q2"});

  const std::string& id() const { return id_; }
  const Point& location() const { return location_; }
  const std::vector<std::string>& fields() const { return fields_; }
  int element() const { return element_; }

  /// Locates the containing element; throws if the point is outside the mesh.
  void resolve(const Mesh& mesh);
  void record(const Mesh& mesh, const DofLayout& layout, const DiscreteState& state, double t);

  const std::vector<double>& times() const { return times_; }
  /// Samples of fields()[i].
  const std::vector<double>& samples(int i) const { return samples_[i]; }
  const std::vector<double>& samples(const std::string& field) const;

 private:
  std::string id_;
  Point location_;
  std::vector<std::string> fields_;
  std::vector<int> index_;
  int element_ = -1;
  std::vector<double> times_;
  std::vector<std::vector<double>> samples_;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Rectangle domain{0.0, 0.0, 1500.0, 1500.0};
  int nx = 20;
  int ny = 20;
  SplitPattern split = SplitPattern::crisscross;
  int k = 3;
  double dt = 1e-2;
  double T = 0.4;
  double theta = 0.5;
  // Region 0 everywhere; region 1 where x >= interface_x when present.
  std::map<int, MaterialParameters> materials;
  double interface_x = 750.0;
  PointSource source;
  int source_quad_order = 41;
  std::vector<Receiver> receivers;
  std::vector<double> snapshot_times;
  bool thermal_coupling = true;  // false zeroes beta and b0
  AssemblyOptions assembly;

  /// Desk-scale homogeneous L3 run with the three standard receivers.
  static ScenarioConfig desk();
  /// Paper-scale variant (h = 50, k = 7, T = 0.6).
  static ScenarioConfig paper();

  void validate() const;
  MaterialField material_field() const;
  Mesh build_mesh() const;
};

using SnapshotWriter = std::function<void(int step, double t, const Mesh&, const DiscreteState&)>;

struct ScenarioResult {
  Mesh mesh;
  DofLayout layout;
  std::vector<Receiver> receivers;
  EnergyReport energy;
  DiscreteState state;
  std::vector<int> region_tags;
  double source_moment_norm = 0.0;  // quadrature of |M b| over the domain
};

ScenarioResult run_scenario(const ScenarioConfig& cfg, const SnapshotWriter& snapshots = {});

/// Full model against the same run with beta = b0 = 0.
struct ComparisonResult {
  ScenarioResult full;
  ScenarioResult reduced;
  /// Per receiver: discrete L2-in-time norm of the u2 difference.
  std::map<std::string, double> difference;
};

ComparisonResult run_comparison(const ScenarioConfig& cfg, const SnapshotWriter& snapshots = {});

/// max |f(x, y) + f(2 c - x, y)| / max |f| over a sample lattice, with c the
/// vertical centerline of the domain.
double antisymmetry_error(const Mesh& mesh, const DofLayout& layout, const DiscreteState& state,
                          const std::string& field, int samples = 60);

struct CausalityReport {
  double window_end = 0.0;  // samples with t <= window_end are checked
  int samples_checked = 0;
  double max_relative = 0.0;  // largest |trace| / max |trace| in the window
};

CausalityReport causality_check(const std::vector<Receiver>& receivers, double window_end);

}  // namespace tphdg
