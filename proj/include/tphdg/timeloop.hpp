// Theta-scheme time integration (implicit midpoint by default) and energy bookkeeping.
#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tphdg/hdg.hpp"

namespace tphdg {

/// Uniform grid on [0, T] with L = ceil(T / dt_target) steps; dt = T / L so the
/// final time is hit exactly.
struct TimeGrid {
  double T = 0.0;
  double dt = 0.0;
  int steps = 0;

  static TimeGrid from_target(double T, double dt_target);
  static TimeGrid from_steps(double T, int steps);
  double time(int n) const { return n == steps ? T : n * dt; }
};

/// All fields at a point: [u(2), q(2), r(2), sigma_xx, sigma_yy, sigma_xy, p, theta].
using StateFunction = std::function<void(const Point&, double*)>;

/// L2 projections of the fields onto the discrete spaces, traces included.
DiscreteState project_state(const Mesh& mesh, const DofLayout& layout, const StateFunction& f,
                            int quad_order = -1);
/// Initial state: projections of the initial fields.
inline DiscreteState set_initial_conditions(const Mesh& mesh, const DofLayout& layout,
                                            const StateFunction& f) {
  return project_state(mesh, layout, f);
}

/// x^{n+1} = x*/theta - (1 - theta)/theta x^n.
template <class V>
V theta_update(const V& stage, const V& previous, double theta) {
  return (stage - (1.0 - theta) * previous) / theta;
}

/// One theta-scheme step of y' = -lambda y; the same stage and update formulas
/// as the field stepper.
double scalar_theta_step(double y, double lambda, double dt, double theta = 0.5);

struct EnergyRow {
  int step = 0;
  double t = 0.0;
  double E = 0.0;
  double damping_work = 0.0;
  double stab_work = 0.0;
  double source_work = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
};

struct EnergyReport {
  std::vector<EnergyRow> rows;

  double max_relative_residual() const;
  /// Largest E_{n+1} - E_n (positive means growth).
  double max_increase() const;
  void write_csv(std::ostream& os) const;
};

struct StepperOptions {
  double theta = 0.5;  // 1 gives backward Euler (debug)
  AssemblyOptions assembly;
  bool track_energy = true;
};

class Stepper {
 public:
  Stepper(const Mesh& mesh, const MaterialField& materials, int k, double dt, ProblemData data,
          const StepperOptions& opt = {});

  const CondensedSystem& system() const { return *system_; }
  const DofLayout& layout() const { return system_->layout(); }
  double dt() const { return dt_; }

  double energy(const DiscreteState& state) const;

  /// Advances `state` from t to t + dt. Returns the energy balance of the step.
  EnergyRow step(DiscreteState& state, double t) const;

 private:
  const Mesh* mesh_;
  const MaterialField* materials_;
  ProblemData data_;
  StepperOptions opt_;
  double dt_;
  std::unique_ptr<CondensedSystem> system_;
};

/// Called after every step (and once for the initial state with step 0).
using Monitor = std::function<void(int step, double t, const DiscreteState& state)>;

struct RunResult {
  DiscreteState state;
  EnergyReport energy;
};

/// Executes grid.steps steps; throws naming the step and field if the state
/// becomes non-finite.
RunResult run(const Stepper& stepper, DiscreteState initial, const TimeGrid& grid,
              const std::vector<Monitor>& monitors = {});

/// Name of the first field holding a non-finite coefficient, or empty.
std::string nonfinite_field(const DiscreteState& state);

}  // namespace tphdg
