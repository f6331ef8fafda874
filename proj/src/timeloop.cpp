#include "tphdg/timeloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "tphdg/error.hpp"
#include "tphdg/parallel.hpp"

namespace tphdg {

TimeGrid TimeGrid::from_target(double T, double dt_target) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error("TimeGrid: final time must be finite and >= 0");
  if (!(dt_target > 0.0) || !std::isfinite(dt_target))
    throw Error("TimeGrid: time step must be positive");
  const double ratio = T / dt_target;
  int steps = static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
  if (T > 0.0) steps = std::max(steps, 1);
  return from_steps(T, steps);
}

TimeGrid TimeGrid::from_steps(double T, int steps) {
  TPHDG_REQUIRE(steps >= 0, "TimeGrid: negative step count");
  TimeGrid g;
  g.T = T;
  g.steps = steps;
  g.dt = steps > 0 ? T / steps : 0.0;
  return g;
}

DiscreteState project_state(const Mesh& mesh, const DofLayout& layout, const StateFunction& f,
                            int quad_order) {
  DiscreteState s(mesh, layout);
  const int order = quad_order > 0 ? quad_order : 2 * (layout.k + 1) + 6;
  const ReferenceTables& T = ReferenceTables::get(layout.k, order);
  parallel_for(mesh.num_elements(), true, [&](int e) {
    const ElementGeometry geo(mesh, e);
    const double sdet = std::sqrt(geo.det);
    double v[11];
    auto col = s.X.col(e);
    for (int q = 0; q < T.volume.size(); ++q) {
      const auto& p = T.volume.points[q];
      f(geo.map(p[0], p[1]), v);
      v[8] *= std::sqrt(2.0);
      const double w = T.volume.weights[q] * sdet;
      const auto phi = T.values.row(q).transpose();
      for (int c = 0; c < 6; ++c) col.segment(layout.velocity(c), layout.nv) += (w * v[c]) * phi;
      for (int c = 0; c < 5; ++c)
        col.segment(layout.theta_block(c), layout.ns) += (w * v[6 + c]) * phi.head(layout.ns);
    }
  });
  const QuadratureRule1D rule = quadrature_segment(order);
  const int fs = layout.face_size();
  std::vector<double> mu(layout.nf);
  double v[11];
  for (int fid = 0; fid < mesh.num_faces(); ++fid) {
    const Face& face = mesh.face(fid);
    const Point a = mesh.vertex(face.v[0]);
    const Point b = mesh.vertex(face.v[1]);
    const double sl = std::sqrt(mesh.face_diameter(fid));
    for (int q = 0; q < rule.size(); ++q) {
      const double t = rule.points[q];
      f(a + t * (b - a), v);
      face_basis_eval(layout.k + 1, t, mu.data());
      const double w = rule.weights[q] * sl;
      for (int c = 0; c < 6; ++c)
        for (int j = 0; j < layout.nf; ++j) s.Y[fid * fs + c * layout.nf + j] += w * v[c] * mu[j];
    }
  }
  return s;
}

double scalar_theta_step(double y, double lambda, double dt, double theta) {
  const double shift = 1.0 / (theta * dt);
  const double stage = shift * y / (shift + lambda);
  return theta_update(stage, y, theta);
}

double EnergyReport::max_relative_residual() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(r.relative_residual));
  return m;
}

double EnergyReport::max_increase() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rows.size(); ++i) m = std::max(m, rows[i].E - rows[i - 1].E);
  return m;
}

void EnergyReport::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "step,t,E,damping_work,stab_work,source_work,residual,relative_residual\n";
  for (const auto& r : rows)
    os << r.step << "," << r.t << "," << r.E << "," << r.damping_work << "," << r.stab_work << ","
       << r.source_work << "," << r.residual << "," << r.relative_residual << "\n";
  os.precision(old);
}

Stepper::Stepper(const Mesh& mesh, const MaterialField& materials, int k, double dt,
                 ProblemData data, const StepperOptions& opt)
    : mesh_(&mesh), materials_(&materials), data_(std::move(data)), opt_(opt), dt_(dt) {
  system_ = std::make_unique<CondensedSystem>(mesh, materials, k, dt, opt.theta, opt.assembly);
}

double Stepper::energy(const DiscreteState& state) const {
  return discrete_energy(*mesh_, *materials_, system_->layout(), state.X);
}

EnergyRow Stepper::step(DiscreteState& state, double t) const {
  const DofLayout& layout = system_->layout();
  const int order = opt_.assembly.quad_order;
  const double ts = t + opt_.theta * dt_;
  const Eigen::MatrixXd F =
      assemble_loads(*mesh_, *materials_, layout, data_, ts, order, opt_.assembly.policy);
  const Eigen::VectorXd g = assemble_boundary_rhs(*mesh_, layout, data_.boundary, ts, order);
  const Eigen::VectorXd Yd = dirichlet_traces(*mesh_, layout, data_.boundary, ts, order);
  Eigen::MatrixXd Xs;
  Eigen::VectorXd Ys;
  system_->solve_stage(state.X, F, g, Yd, Xs, Ys);

  EnergyRow row;
  row.t = t + dt_;
  if (opt_.track_energy) {
    const double E0 = discrete_energy(*mesh_, *materials_, layout, state.X);
    row.damping_work = dt_ * damping_form(*mesh_, *materials_, layout, Xs);
    row.stab_work = dt_ * stabilization_form(*mesh_, layout, Xs, Ys, order);
    double src = 0.0;
    for (int e = 0; e < mesh_->num_elements(); ++e) src += F.col(e).dot(Xs.col(e));
    src += g.dot(Ys);
    row.source_work = dt_ * src;
    state.X = theta_update(Xs, state.X, opt_.theta);
    row.E = discrete_energy(*mesh_, *materials_, layout, state.X);
    row.residual = row.E - E0 + row.damping_work + row.stab_work - row.source_work;
    const double scale = std::max({std::abs(E0), std::abs(row.E), std::abs(row.source_work),
                                   std::numeric_limits<double>::min()});
    row.relative_residual = row.residual / scale;
  } else {
    state.X = theta_update(Xs, state.X, opt_.theta);
  }

  const double t1 = t + dt_;
  state.Y = system_->recover_traces(
      state.X, assemble_boundary_rhs(*mesh_, layout, data_.boundary, t1, order),
      dirichlet_traces(*mesh_, layout, data_.boundary, t1, order));
  return row;
}

std::string nonfinite_field(const DiscreteState& state) {
  static const char* names[] = {"u_x", "u_y", "q_x", "q_y", "r_x", "r_y",
                                "sigma_xx", "sigma_yy", "sigma_xy", "p", "theta"};
  const DofLayout& l = state.layout;
  for (int c = 0; c < 6; ++c)
    if (!state.X.middleRows(l.velocity(c), l.nv).allFinite()) return names[c];
  for (int c = 0; c < 5; ++c)
    if (!state.X.middleRows(l.theta_block(c), l.ns).allFinite()) return names[6 + c];
  if (!state.Y.allFinite()) return "traces";
  return {};
}

RunResult run(const Stepper& stepper, DiscreteState initial, const TimeGrid& grid,
              const std::vector<Monitor>& monitors) {
  RunResult result;
  result.state = std::move(initial);
  if (grid.steps > 0 && std::abs(grid.dt - stepper.dt()) > 1e-12 * grid.dt)
    throw Error("run: time grid step does not match the stepper");
  EnergyRow row0;
  row0.E = stepper.energy(result.state);
  result.energy.rows.push_back(row0);
  for (const auto& m : monitors) m(0, 0.0, result.state);
  for (int n = 0; n < grid.steps; ++n) {
    EnergyRow row = stepper.step(result.state, grid.time(n));
    row.step = n + 1;
    row.t = grid.time(n + 1);
    const std::string bad = nonfinite_field(result.state);
    if (!bad.empty()) {
      std::ostringstream msg;
      msg << "run: non-finite value in field '" << bad << "' at step " << n + 1;
      throw Error(msg.str());
    }
    result.energy.rows.push_back(row);
    for (const auto& m : monitors) m(n + 1, row.t, result.state);
  }
  return result;
}

}  // namespace tphdg
