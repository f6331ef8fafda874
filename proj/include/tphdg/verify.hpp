// Manufactured solutions, error norms, convergence studies, patch test, oracle.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tphdg/hdg.hpp"
#include "tphdg/jet.hpp"
#include "tphdg/timeloop.hpp"

namespace tphdg {

/// Closed-form fields [u(2), q(2), r(2), sigma_xx, sigma_yy, sigma_xy, p, theta]
/// with first derivatives in x, y and t.
class ExactSolution {
 public:
  virtual ~ExactSolution() = default;
  virtual std::string name() const = 0;
  virtual void fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const = 0;

  void values(const Point& p, double t, double* out) const;
  StateFunction at(double t) const;
  /// [u_x, u_y, p, theta] on the boundary.
  BoundaryFunction boundary() const;
};

/// The trigonometric solution on the unit square. q and r are chosen so the
/// Cattaneo residual vanishes; sigma is the time integral of C eps(u).
class ManufacturedSolution : public ExactSolution {
 public:
  explicit ManufacturedSolution(const MaterialParameters& p);
  std::string name() const override { return "manufactured"; }
  void fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const override;

  double r_cos() const { return a_; }
  double r_sin() const { return b_; }

 private:
  double mu_, lambda_;
  double a_, b_;
};

/// Random polynomial fields, linear in time: velocities of degree `vdeg`,
/// the remaining fields of degree `sdeg`.
class PolynomialSolution : public ExactSolution {
 public:
  PolynomialSolution(int vdeg, int sdeg, std::uint64_t seed, double time_slope = 1.0);
  std::string name() const override { return "polynomial"; }
  void fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const override;

 private:
  struct Poly {
    std::vector<std::array<int, 2>> exps;
    std::vector<double> a, b;  // value = sum (a + t b) x^i y^j
  };
  std::array<Poly, 11> polys_;
};

class ZeroSolution : public ExactSolution {
 public:
  std::string name() const override { return "zero"; }
  void fields(const Jet&, const Jet&, const Jet&, Jet* out) const override {
    for (int i = 0; i < 11; ++i) out[i] = Jet(0.0);
  }
};

/// Residual of the exact fields in the governing equations at (x, t) for
/// material p: [F_s(2), F_f(2), F_r(2), G_sigma stored (3), g_p, g].
std::array<double, 11> source_values(const ExactSolution& sol, const MaterialParameters& p,
                                     const Point& x, double t);
/// The same residual as a solver source over a material field.
VolumeSource manufactured_sources(std::shared_ptr<const ExactSolution> sol,
                                  const MaterialField& materials);
/// Sources plus boundary data for the exact solution.
ProblemData manufactured_problem(std::shared_ptr<const ExactSolution> sol,
                                 const MaterialField& materials);

struct ErrorNorms {
  double theta = 0.0;  // H2-weighted error of (sigma, p, theta)
  double u = 0.0;      // H1-weighted error of (u, q, r)
  double jump = 0.0;   // ||(k+1)/h_F^{1/2} (u_h - u_hat_h)||
};

ErrorNorms error_norms(const Mesh& mesh, const MaterialField& materials, const DiscreteState& state,
                       const ExactSolution& sol, double t, int quad_order = -1);

// Convergence studies -------------------------------------------------------------

struct ConvergenceRow {
  int level = 0;
  double param = 0.0;  // h, k or dt
  double e_theta = 0.0;
  double e_u = 0.0;
  double jump = 0.0;
  double rate_theta = 0.0;  // NaN when not applicable
  double rate_u = 0.0;
};

struct ConvergenceTable {
  std::string param_name = "h";  // h | k | dt
  std::vector<ConvergenceRow> rows;

  /// Rates between consecutive rows: log(e_i/e_{i+1}) / log(x_i/x_{i+1}) for
  /// h and dt, log(e_i/e_{i+1}) for k.
  void compute_rates();
  /// Least-squares slope of log e against log x (h, dt) or x (k).
  double slope_theta() const;
  double slope_u() const;
  void write_csv(std::ostream& os) const;
};

struct MmsOptions {
  MaterialParameters material;
  std::shared_ptr<const ExactSolution> solution;  // default: manufactured
  double T = 0.5;
  double theta = 0.5;
  AssemblyOptions assembly;
  SplitPattern split = SplitPattern::diagonal;
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

struct MmsResult {
  ErrorNorms errors;
  DiscreteState state;
  EnergyReport energy;
  int steps = 0;
};

/// Solves the exact-solution problem on `mesh` up to grid.T and measures errors.
MmsResult run_mms(const Mesh& mesh, int k, const MaterialField& materials,
                  std::shared_ptr<const ExactSolution> sol, const TimeGrid& grid,
                  const StepperOptions& opt = {});

/// Unit-square meshes with n cells per side; dt = c_t h^{(k+2)/2}, h = 1/n.
ConvergenceTable converge_h(int k, const std::vector<int>& cells, const MmsOptions& opt,
                            double c_t = 0.25);
ConvergenceTable converge_k(int n, const std::vector<int>& degrees, double dt,
                            const MmsOptions& opt);
ConvergenceTable converge_dt(int n, int k, const std::vector<int>& steps, const MmsOptions& opt);

// Patch test and oracle -----------------------------------------------------------

struct PatchResult {
  bool passed = false;
  double max_relative_error = 0.0;
  int worst_step = -1;
  int worst_element = -1;
  std::string worst_field;
};

/// Runs `steps` steps with a polynomial exact solution and compares every
/// coefficient with the projected exact fields.
PatchResult patch_test(const Mesh& mesh, int k, const MaterialField& materials,
                       std::shared_ptr<const ExactSolution> sol, int steps, double dt,
                       double tolerance = 1e-10);

struct OracleResult {
  double max_relative_difference = 0.0;
  double scale = 0.0;
  DiscreteState condensed;  // stage unknowns
  DiscreteState monolithic;
};

/// One implicit stage solved both through the condensed system and by a dense
/// solve of all element and trace unknowns.
OracleResult oracle_monolithic(const Mesh& mesh, int k, const MaterialField& materials,
                               const DiscreteState& initial, const ProblemData& data, double t,
                               double dt, const AssemblyOptions& opt = {});

/// Zero sources, homogeneous boundary data, random initial state.
struct EnergyCheck {
  EnergyReport report;
  double max_relative_residual = 0.0;
  double max_increase = 0.0;          // largest E_{n+1} - E_n relative to E_0
  double conservation_defect = 0.0;   // max |E_n + dissipated work - E_0| / E_0
};

EnergyCheck free_decay(const Mesh& mesh, int k, const MaterialField& materials, int steps,
                       double dt, std::uint64_t seed, const StepperOptions& opt = {});

/// Random state with every coefficient drawn from N(0, 1).
DiscreteState random_state(const Mesh& mesh, const DofLayout& layout, std::uint64_t seed);

}  // namespace tphdg
