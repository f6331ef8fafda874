#include "tphdg/model.hpp"

#include <cmath>
#include <utility>
#include <sstream>

#include "tphdg/error.hpp"

namespace tphdg {

void MaterialParameters::set_young_poisson(double young, double poisson) {
  lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  mu = young / (2.0 * (1.0 + poisson));
}

void MaterialParameters::validate() const {
  auto fail = [this](const std::string& what) {
    std::string label = name.empty() ? std::string("material") : "material '" + name + "'";
    throw ConfigError(label + ": " + what);
  };
  auto finite = [](double v) { return std::isfinite(v); };
  for (double v : {rho_s, rho_f, porosity, tortuosity, eta_over_kappa, alpha, c0, a0, b0, beta, chi,
                   tau, mu, lambda})
    if (!finite(v)) fail("non-finite parameter value");
  if (!(porosity > 0.0 && porosity < 1.0)) fail("porosity must lie in (0,1)");
  if (!(tortuosity > 1.0)) fail("tortuosity nu > 1 violated");
  if (!(rho() > 0.0)) fail("rho = phi*rho_f + (1-phi)*rho_s > 0 violated");
  if (!(rho() * rho_w() - rho_f * rho_f > 0.0)) fail("rho*rho_w - rho_f^2 > 0 violated");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0,1]");
  if (!(a0 > 0.0)) fail("a0 > 0 violated");
  if (!(c0 > 0.0)) fail("c0 > 0 violated");
  if (!(a0 * c0 - b0 * b0 > 0.0)) fail("a0*c0 - b0^2 > 0 violated (Q not positive definite)");
  if (!(mu > 0.0)) fail("mu > 0 violated");
  if (!(lambda > 0.0)) fail("lambda > 0 violated");
  if (!(tau > 0.0)) fail("tau > 0 violated");
  if (!(chi > 0.0)) fail("chi > 0 violated");
  if (!(eta_over_kappa >= 0.0)) fail("eta/kappa >= 0 violated");
}

CoefficientMatrices derive_matrices(const MaterialParameters& p) {
  p.validate();
  CoefficientMatrices m;
  m.R << p.rho(), p.rho_f, 0.0,  //
      p.rho_f, p.rho_w(), 0.0,   //
      0.0, 0.0, p.tau / p.chi;
  m.Q << p.c0, -p.b0, -p.b0, p.a0;
  const Eigen::Vector3d e(1.0, 1.0, 0.0);
  m.stiffness = 2.0 * p.mu * Eigen::Matrix3d::Identity() + p.lambda * e * e.transpose();
  m.compliance = (Eigen::Matrix3d::Identity() -
                  (p.lambda / (2.0 * p.mu + 2.0 * p.lambda)) * e * e.transpose()) /
                 (2.0 * p.mu);
  m.damping = Eigen::Vector3d(0.0, p.eta_over_kappa, 1.0 / p.chi);
  m.mu = p.mu;
  m.lambda = p.lambda;
  m.alpha = p.alpha;
  m.beta = p.beta;
  return m;
}

Sym2 hooke_apply(const Sym2& z, double mu, double lambda) {
  const double tr = z.trace();
  return {2.0 * mu * z.xx + lambda * tr, 2.0 * mu * z.yy + lambda * tr, 2.0 * mu * z.xy};
}

Sym2 compliance_apply(const Sym2& t, double mu, double lambda) {
  const double c = lambda / (2.0 * mu + 2.0 * lambda) * t.trace();
  return {(t.xx - c) / (2.0 * mu), (t.yy - c) / (2.0 * mu), t.xy / (2.0 * mu)};
}

SpectralBounds spectral_bounds(const CoefficientMatrices& m) {
  SpectralBounds b;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> r(m.R);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> q(m.Q);
  b.rho_min = r.eigenvalues().minCoeff();
  b.rho_max = r.eigenvalues().maxCoeff();
  b.q_min = q.eigenvalues().minCoeff();
  b.q_max = q.eigenvalues().maxCoeff();
  b.hooke_min = 2.0 * m.mu;
  b.hooke_max = 2.0 * m.mu + 2.0 * m.lambda;
  b.a_min = std::min(1.0 / b.hooke_max, b.q_min);
  b.a_max = std::max(1.0 / b.hooke_min, b.q_max);
  return b;
}

MaterialParameters named_parameter_set(std::string_view name) {
  MaterialParameters p;
  if (name == "L1") {
    p.name = "L1";
    return p;  // defaults are the L1 values
  }
  if (name == "L2-repaired") {
    // Near-incompressible skeleton with a small storage coefficient; b0 keeps
    // the L1 ratio b0/sqrt(a0*c0) = 0.5 so Q stays positive definite.
    p.name = "L2-repaired";
    p.set_young_poisson(100.0, 0.49);
    p.c0 = 1e-6;
    p.b0 = 0.5 * std::sqrt(p.a0 * p.c0);
    return p;
  }
  const bool literal = name == "L3-literal" || name == "L4-literal";
  if (name == "L3" || name == "L4" || literal) {
    p.name = std::string(name);
    p.rho_f = 1000.0;
    p.rho_s = 2650.0;
    p.porosity = 0.3;
    p.tortuosity = 2.0;
    p.mu = 1.885e9;
    p.lambda = 4.433e8;
    p.tau = 1.5e-2;
    p.chi = 1.5e4;
    p.eta_over_kappa = 1e9;
    // Storage in 1/Pa multiplies dp/dt, heat capacity in Pa/K^2 multiplies
    // dtheta/dt. The literal sets keep the printed symbol assignment.
    p.c0 = 1.3684e-10;
    p.b0 = 1.3684e-5;
    p.a0 = 4.1695;
    p.alpha = 0.7143;
    p.beta = 4.8571e4;
    if (name == "L4" || name == "L4-literal") {
      p.mu = 9e9;
      p.lambda = 4e9;
      p.a0 = 4.1017;
      p.alpha = 0.9514;
      p.beta = 2.4857e4;
    }
    if (literal) std::swap(p.c0, p.a0);
    return p;
  }
  throw ConfigError("unknown parameter set '" + std::string(name) +
                    "' (expected L1, L2-repaired, L3, L4, L3-literal or L4-literal)");
}

std::vector<std::string> named_parameter_sets() { return {"L1", "L2-repaired", "L3", "L4", "L3-literal", "L4-literal"}; }

MaterialField::MaterialField(const MaterialParameters& homogeneous) { set(0, homogeneous); }

void MaterialField::set(int region, const MaterialParameters& params) {
  entries_[region] = Entry{params, derive_matrices(params)};
}

const MaterialParameters& MaterialField::parameters(int region) const {
  auto it = entries_.find(region);
  if (it == entries_.end()) throw Error("MaterialField: no material for region " + std::to_string(region));
  return it->second.params;
}

const CoefficientMatrices& MaterialField::matrices(int region) const {
  auto it = entries_.find(region);
  if (it == entries_.end()) throw Error("MaterialField: no material for region " + std::to_string(region));
  return it->second.matrices;
}

std::vector<int> MaterialField::regions() const {
  std::vector<int> r;
  for (const auto& [k, v] : entries_) r.push_back(k);
  return r;
}

void MaterialField::check_covers(const std::vector<int>& tags) const {
  for (int t : tags)
    if (!contains(t)) throw ConfigError("material field has no entry for region " + std::to_string(t));
}

}  // namespace tphdg
