#include "tphdg/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "tphdg/error.hpp"
#include "tphdg/parallel.hpp"

namespace tphdg {

namespace {

constexpr double kPi = std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* field_name(const DofLayout& l, int row) {
  static const char* names[] = {"u_x", "u_y", "q_x", "q_y", "r_x", "r_y",
                                "sigma_xx", "sigma_yy", "sigma_xy", "p", "theta"};
  if (row < 6 * l.nv) return names[row / l.nv];
  return names[6 + (row - 6 * l.nv) / l.ns];
}

}  // namespace

void ExactSolution::values(const Point& p, double t, double* out) const {
  Jet f[11];
  fields(Jet(p.x, 0), Jet(p.y, 1), Jet(t, 2), f);
  for (int i = 0; i < 11; ++i) out[i] = f[i].v;
}

StateFunction ExactSolution::at(double t) const {
  return [this, t](const Point& p, double* out) { values(p, t, out); };
}

BoundaryFunction ExactSolution::boundary() const {
  return [this](const Point& p, double t, double* out) {
    double v[11];
    values(p, t, v);
    out[0] = v[0];
    out[1] = v[1];
    out[2] = v[9];
    out[3] = v[10];
  };
}

ManufacturedSolution::ManufacturedSolution(const MaterialParameters& p)
    : mu_(p.mu), lambda_(p.lambda) {
  a_ = -p.chi / (1.0 + 4.0 * kPi * kPi * p.tau * p.tau);
  b_ = 2.0 * kPi * p.tau * a_;
}

void ManufacturedSolution::fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const {
  const Jet sx = sin(kPi * x), cx = cos(kPi * x);
  const Jet sy = sin(kPi * y), cy = cos(kPi * y);
  const Jet ct = cos(2.0 * kPi * t), st = sin(2.0 * kPi * t);
  const Jet w1 = sx * cy, w2 = cx * sy;
  out[0] = 2.0 * kPi * ct * w1;
  out[1] = 2.0 * kPi * ct * w2;
  out[2] = ct * w1;
  out[3] = ct * w2;
  out[4] = Jet(0.0);
  out[5] = (a_ * ct + b_ * st) * kPi * cy;
  out[6] = st * ((2.0 * mu_ + 2.0 * lambda_) * kPi) * cx * cy;
  out[7] = out[6];
  out[8] = st * (-2.0 * mu_ * kPi) * sx * sy;
  out[9] = sx * sy * ct;
  out[10] = sy * ct;
}

PolynomialSolution::PolynomialSolution(int vdeg, int sdeg, std::uint64_t seed, double time_slope) {
  TPHDG_REQUIRE(vdeg >= 0 && sdeg >= 0, "PolynomialSolution: negative degree");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int f = 0; f < 11; ++f) {
    const int deg = f < 6 ? vdeg : sdeg;
    Poly& p = polys_[f];
    for (int n = 0; n <= deg; ++n)
      for (int i = n; i >= 0; --i) {
        p.exps.push_back({i, n - i});
        p.a.push_back(unit(rng));
        p.b.push_back(time_slope * unit(rng));
      }
  }
}

void PolynomialSolution::fields(const Jet& x, const Jet& y, const Jet& t, Jet* out) const {
  for (int f = 0; f < 11; ++f) {
    const Poly& p = polys_[f];
    Jet s(0.0);
    for (std::size_t m = 0; m < p.exps.size(); ++m)
      s += (p.a[m] + p.b[m] * t) * pow(x, p.exps[m][0]) * pow(y, p.exps[m][1]);
    out[f] = s;
  }
}

std::array<double, 11> source_values(const ExactSolution& sol, const MaterialParameters& p,
                                     const Point& x, double t) {
  Jet f[11];
  sol.fields(Jet(x.x, 0), Jet(x.y, 1), Jet(t, 2), f);
  const Jet *u = f, *q = f + 2, *r = f + 4;
  const Jet &sxx = f[6], &syy = f[7], &sxy = f[8], &pr = f[9], &th = f[10];
  const double rho = p.rho(), rf = p.rho_f, rw = p.rho_w();
  const double grad_iso[2] = {p.alpha * pr.dx() + p.beta * th.dx(),
                              p.alpha * pr.dy() + p.beta * th.dy()};
  const double div_sigma[2] = {sxx.dx() + sxy.dy(), sxy.dx() + syy.dy()};
  const double grad_p[2] = {pr.dx(), pr.dy()};
  const double grad_th[2] = {th.dx(), th.dy()};
  std::array<double, 11> s{};
  for (int d = 0; d < 2; ++d) {
    s[d] = rho * u[d].dt() + rf * q[d].dt() - (div_sigma[d] - grad_iso[d]);
    s[2 + d] = rf * u[d].dt() + rw * q[d].dt() + p.eta_over_kappa * q[d].v + grad_p[d];
    s[4 + d] = p.tau / p.chi * r[d].dt() + r[d].v / p.chi + grad_th[d];
  }
  const double exx = u[0].dx(), eyy = u[1].dy(), exy = 0.5 * (u[0].dy() + u[1].dx());
  const double tr = exx + eyy;
  s[6] = sxx.dt() - (2.0 * p.mu * exx + p.lambda * tr);
  s[7] = syy.dt() - (2.0 * p.mu * eyy + p.lambda * tr);
  s[8] = std::sqrt(2.0) * (sxy.dt() - 2.0 * p.mu * exy);
  const double div_u = tr;
  const double div_q = q[0].dx() + q[1].dy();
  const double div_r = r[0].dx() + r[1].dy();
  s[9] = p.c0 * pr.dt() - p.b0 * th.dt() + p.alpha * div_u + div_q;
  s[10] = p.a0 * th.dt() - p.b0 * pr.dt() + p.beta * div_u + div_r;
  return s;
}

VolumeSource manufactured_sources(std::shared_ptr<const ExactSolution> sol,
                                  const MaterialField& materials) {
  return [sol, &materials](const Point& x, double t, int region, double* out) {
    const auto s = source_values(*sol, materials.parameters(region), x, t);
    for (int i = 0; i < 11; ++i) out[i] = s[i];
  };
}

ProblemData manufactured_problem(std::shared_ptr<const ExactSolution> sol,
                                 const MaterialField& materials) {
  ProblemData data;
  data.source = manufactured_sources(sol, materials);
  data.boundary = sol->boundary();
  return data;
}

ErrorNorms error_norms(const Mesh& mesh, const MaterialField& materials, const DiscreteState& state,
                       const ExactSolution& sol, double t, int quad_order) {
  const DofLayout& l = state.layout;
  const int order = quad_order > 0 ? quad_order : 2 * (l.k + 2) + 3;
  const ReferenceTables& T = ReferenceTables::get(l.k, order);
  std::vector<double> eth(mesh.num_elements(), 0.0), eu(mesh.num_elements(), 0.0);
  parallel_for(mesh.num_elements(), true, [&](int e) {
    const ElementGeometry geo(mesh, e);
    const auto& m = materials.matrices(mesh.region(e));
    const double inv_sdet = 1.0 / std::sqrt(geo.det);
    const auto col = state.X.col(e);
    double v[11];
    for (int q = 0; q < T.volume.size(); ++q) {
      const auto& p = T.volume.points[q];
      sol.values(geo.map(p[0], p[1]), t, v);
      const auto phi = T.values.row(q);
      double d[11];
      for (int c = 0; c < 6; ++c)
        d[c] = v[c] - inv_sdet * phi.dot(col.segment(l.velocity(c), l.nv));
      for (int c = 0; c < 5; ++c)
        d[6 + c] = v[6 + c] * (c == 2 ? std::sqrt(2.0) : 1.0) -
                   inv_sdet * phi.head(l.ns).dot(col.segment(l.theta_block(c), l.ns));
      const double w = T.volume.weights[q] * geo.det;
      for (int dd = 0; dd < 2; ++dd) {
        const Eigen::Vector3d U(d[dd], d[2 + dd], d[4 + dd]);
        eu[e] += w * U.dot(m.R * U);
      }
      const Eigen::Vector3d S(d[6], d[7], d[8]);
      const Eigen::Vector2d P(d[9], d[10]);
      eth[e] += w * (S.dot(m.compliance * S) + P.dot(m.Q * P));
    }
  });
  ErrorNorms r;
  double a = 0.0, b = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    a += eth[e];
    b += eu[e];
  }
  r.theta = std::sqrt(a);
  r.u = std::sqrt(b);
  r.jump = std::sqrt(std::max(0.0, stabilization_form(mesh, l, state.X, state.Y)));
  return r;
}

// Convergence tables -----------------------------------------------------------------

void ConvergenceTable::compute_rates() {
  const double floor = 1e-13;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].level = static_cast<int>(i);
    rows[i].rate_theta = kNaN;
    rows[i].rate_u = kNaN;
    if (i == 0) continue;
    const auto& a = rows[i - 1];
    auto& b = rows[i];
    const double denom = param_name == "k" ? (b.param - a.param) : std::log(a.param / b.param);
    if (a.e_theta > floor && b.e_theta > floor) b.rate_theta = std::log(a.e_theta / b.e_theta) / denom;
    if (a.e_u > floor && b.e_u > floor) b.rate_u = std::log(a.e_u / b.e_u) / denom;
  }
}

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return kNaN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double table_slope(const ConvergenceTable& t, bool theta) {
  std::vector<double> x, y;
  for (const auto& r : t.rows) {
    const double e = theta ? r.e_theta : r.e_u;
    if (!(e > 0.0)) continue;
    x.push_back(t.param_name == "k" ? r.param : std::log(r.param));
    y.push_back(std::log(e));
  }
  return ls_slope(x, y);
}

}  // namespace

double ConvergenceTable::slope_theta() const { return table_slope(*this, true); }
double ConvergenceTable::slope_u() const { return table_slope(*this, false); }

void ConvergenceTable::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "level," << param_name << ",e_Theta,e_u,jump_seminorm,rate_Theta,rate_u\n";
  for (const auto& r : rows)
    os << r.level << "," << r.param << "," << r.e_theta << "," << r.e_u << "," << r.jump << ","
       << r.rate_theta << "," << r.rate_u << "\n";
  os.precision(old);
}

// Studies ------------------------------------------------------------------------------

MmsResult run_mms(const Mesh& mesh, int k, const MaterialField& materials,
                  std::shared_ptr<const ExactSolution> sol, const TimeGrid& grid,
                  const StepperOptions& opt) {
  const DofLayout layout(k);
  MmsResult res;
  DiscreteState s0 = project_state(mesh, layout, sol->at(0.0));
  if (grid.steps == 0) {
    res.state = std::move(s0);
  } else {
    Stepper stepper(mesh, materials, k, grid.dt, manufactured_problem(sol, materials), opt);
    RunResult rr = run(stepper, std::move(s0), grid);
    res.state = std::move(rr.state);
    res.energy = std::move(rr.energy);
  }
  res.steps = grid.steps;
  res.errors = error_norms(mesh, materials, res.state, *sol, grid.T);
  return res;
}

namespace {

std::shared_ptr<const ExactSolution> solution_or_default(const MmsOptions& opt) {
  if (opt.solution) return opt.solution;
  return std::make_shared<ManufacturedSolution>(opt.material);
}

StepperOptions stepper_options(const MmsOptions& opt) {
  StepperOptions s;
  s.theta = opt.theta;
  s.assembly = opt.assembly;
  s.track_energy = false;
  return s;
}

Mesh unit_mesh(int n, const MmsOptions& opt) {
  return build_structured_mesh(n, n, Rectangle{0.0, 0.0, 1.0, 1.0}, opt.split, opt.jitter, opt.seed);
}

}  // namespace

ConvergenceTable converge_h(int k, const std::vector<int>& cells, const MmsOptions& opt,
                            double c_t) {
  ConvergenceTable table;
  table.param_name = "h";
  const MaterialField materials(opt.material);
  const auto sol = solution_or_default(opt);
  for (int n : cells) {
    const Mesh mesh = unit_mesh(n, opt);
    const double h = 1.0 / n;
    const TimeGrid grid = TimeGrid::from_target(opt.T, c_t * std::pow(h, 0.5 * (k + 2)));
    const MmsResult r = run_mms(mesh, k, materials, sol, grid, stepper_options(opt));
    table.rows.push_back({0, h, r.errors.theta, r.errors.u, r.errors.jump, kNaN, kNaN});
  }
  table.compute_rates();
  return table;
}

ConvergenceTable converge_k(int n, const std::vector<int>& degrees, double dt,
                            const MmsOptions& opt) {
  ConvergenceTable table;
  table.param_name = "k";
  const MaterialField materials(opt.material);
  const auto sol = solution_or_default(opt);
  const Mesh mesh = unit_mesh(n, opt);
  const TimeGrid grid = TimeGrid::from_target(opt.T, dt);
  for (int k : degrees) {
    const MmsResult r = run_mms(mesh, k, materials, sol, grid, stepper_options(opt));
    table.rows.push_back({0, static_cast<double>(k), r.errors.theta, r.errors.u, r.errors.jump,
                          kNaN, kNaN});
  }
  table.compute_rates();
  return table;
}

ConvergenceTable converge_dt(int n, int k, const std::vector<int>& steps, const MmsOptions& opt) {
  ConvergenceTable table;
  table.param_name = "dt";
  const MaterialField materials(opt.material);
  const auto sol = solution_or_default(opt);
  const Mesh mesh = unit_mesh(n, opt);
  for (int L : steps) {
    const TimeGrid grid = TimeGrid::from_steps(opt.T, L);
    const MmsResult r = run_mms(mesh, k, materials, sol, grid, stepper_options(opt));
    table.rows.push_back({0, grid.dt, r.errors.theta, r.errors.u, r.errors.jump, kNaN, kNaN});
  }
  table.compute_rates();
  return table;
}

// Patch test and oracle ----------------------------------------------------------------

PatchResult patch_test(const Mesh& mesh, int k, const MaterialField& materials,
                       std::shared_ptr<const ExactSolution> sol, int steps, double dt,
                       double tolerance) {
  const DofLayout layout(k);
  StepperOptions so;
  so.track_energy = false;
  Stepper stepper(mesh, materials, k, dt, manufactured_problem(sol, materials), so);
  DiscreteState state = project_state(mesh, layout, sol->at(0.0));
  PatchResult res;
  for (int n = 1; n <= steps; ++n) {
    stepper.step(state, (n - 1) * dt);
    const DiscreteState ref = project_state(mesh, layout, sol->at(n * dt));
    const double scale =
        std::max({ref.X.cwiseAbs().maxCoeff(), ref.Y.cwiseAbs().maxCoeff(), 1e-300});
    Eigen::Index row = 0, col = 0;
    const double ex = (state.X - ref.X).cwiseAbs().maxCoeff(&row, &col) / scale;
    const double ey = (state.Y - ref.Y).cwiseAbs().maxCoeff() / scale;
    const double err = std::max(ex, ey);
    if (err > res.max_relative_error || res.worst_step < 0) {
      res.max_relative_error = err;
      res.worst_step = n;
      if (ex >= ey) {
        res.worst_element = static_cast<int>(col);
        res.worst_field = field_name(layout, static_cast<int>(row));
      } else {
        res.worst_element = -1;
        res.worst_field = "traces";
      }
    }
  }
  res.passed = res.max_relative_error <= tolerance;
  return res;
}

OracleResult oracle_monolithic(const Mesh& mesh, int k, const MaterialField& materials,
                               const DiscreteState& initial, const ProblemData& data, double t,
                               double dt, const AssemblyOptions& opt) {
  const double theta = 0.5;
  const DofLayout layout(k);
  const double ts = t + theta * dt;
  const Eigen::MatrixXd F = assemble_loads(mesh, materials, layout, data, ts, opt.quad_order);
  const Eigen::VectorXd g = assemble_boundary_rhs(mesh, layout, data.boundary, ts, opt.quad_order);
  const Eigen::VectorXd Yd = dirichlet_traces(mesh, layout, data.boundary, ts, opt.quad_order);

  OracleResult res;
  res.condensed = DiscreteState(mesh, layout);
  const CondensedSystem sys(mesh, materials, k, dt, theta, opt);
  sys.solve_stage(initial.X, F, g, Yd, res.condensed.X, res.condensed.Y);

  const TraceMap& tm = sys.traces();
  const int ne = mesh.num_elements();
  const int nx = layout.volume_size();
  const int ny = layout.local_trace_size();
  const int fs = layout.face_size();
  const int N = ne * nx + tm.num_free();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  const double shift = 1.0 / (theta * dt);
  AssemblyOptions plain = opt;
  plain.cache = false;
  for (int e = 0; e < ne; ++e) {
    const LocalOperator op = assemble_local(mesh, e, materials.matrices(mesh.region(e)), layout, plain);
    const Eigen::MatrixXd Kxy = op.Kxy();
    const Eigen::MatrixXd Kyx = op.Kyx();
    const int r0 = e * nx;
    K.block(r0, r0, nx, nx) = shift * op.mass + op.Kxx();
    b.segment(r0, nx) = shift * op.mass * initial.X.col(e) + F.col(e);
    for (int i = 0; i < ny; ++i) {
      const int dof = mesh.element_faces(e)[i / fs] * fs + i % fs;
      const int fi = tm.free_index(dof);
      if (fi < 0) {
        b.segment(r0, nx) -= Kxy.col(i) * Yd[dof];
        continue;
      }
      K.block(r0, ne * nx + fi, nx, 1) += Kxy.col(i);
      K.block(ne * nx + fi, r0, 1, nx) += Kyx.row(i);
      K(ne * nx + fi, ne * nx + fi) += op.Shh[i];
    }
  }
  for (int fi = 0; fi < tm.num_free(); ++fi) b[ne * nx + fi] = g[tm.free_dofs()[fi]];
  // Symmetric diagonal equilibration, as for the element solves.
  const Eigen::VectorXd d = K.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Ks = d.asDiagonal() * K * d.asDiagonal();
  const Eigen::VectorXd z = d.asDiagonal() * Ks.fullPivLu().solve(d.asDiagonal() * b);

  res.monolithic = DiscreteState(mesh, layout);
  for (int e = 0; e < ne; ++e) res.monolithic.X.col(e) = z.segment(e * nx, nx);
  res.monolithic.Y = Yd;
  for (int fi = 0; fi < tm.num_free(); ++fi) res.monolithic.Y[tm.free_dofs()[fi]] = z[ne * nx + fi];

  res.scale = std::max({res.monolithic.X.cwiseAbs().maxCoeff(),
                        res.monolithic.Y.cwiseAbs().maxCoeff(), 1e-300});
  const double dx = (res.condensed.X - res.monolithic.X).cwiseAbs().maxCoeff();
  const double dy = (res.condensed.Y - res.monolithic.Y).cwiseAbs().maxCoeff();
  res.max_relative_difference = std::max(dx, dy) / res.scale;
  return res;
}

EnergyCheck free_decay(const Mesh& mesh, int k, const MaterialField& materials, int steps,
                       double dt, std::uint64_t seed, const StepperOptions& opt) {
  StepperOptions sopt = opt;
  sopt.track_energy = true;
  const Stepper stepper(mesh, materials, k, dt, ProblemData{}, sopt);
  const DiscreteState initial = random_state(mesh, stepper.layout(), seed);
  EnergyCheck out;
  out.report = run(stepper, initial, TimeGrid::from_steps(steps * dt, steps)).energy;
  const auto& rows = out.report.rows;
  const double E0 = rows.front().E;
  out.max_relative_residual = out.report.max_relative_residual();
  out.max_increase = out.report.max_increase() / E0;
  double work = 0.0;
  for (std::size_t n = 1; n < rows.size(); ++n) {
    work += rows[n].damping_work + rows[n].stab_work;
    out.conservation_defect =
        std::max(out.conservation_defect, std::abs(rows[n].E + work - E0) / E0);
  }
  return out;
}

DiscreteState random_state(const Mesh& mesh, const DofLayout& layout, std::uint64_t seed) {
  DiscreteState s(mesh, layout);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < s.X.cols(); ++j)
    for (Eigen::Index i = 0; i < s.X.rows(); ++i) s.X(i, j) = normal(rng);
  const TraceMap tm(mesh, layout);
  for (Eigen::Index i = 0; i < s.Y.size(); ++i) s.Y[i] = tm.dirichlet(static_cast<int>(i)) ? 0.0 : normal(rng);
  return s;
}

}  // namespace tphdg
