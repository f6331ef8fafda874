// Thermo-poroelastic material parameters and derived coefficient matrices.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tphdg {

/// Symmetric 2x2 tensor.
struct Sym2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double trace() const { return xx + yy; }
  /// Frobenius inner product.
  double dot(const Sym2& o) const { return xx * o.xx + yy * o.yy + 2.0 * xy * o.xy; }
};

/// Material record in SI units. Elastic moduli are the Lame pair.
struct MaterialParameters {
  std::string name;
  double rho_s = 1.0;
  double rho_f = 1.0;
  double porosity = 0.5;
  double tortuosity = 2.0;
  double eta_over_kappa = 1.0;
  double alpha = 1.0;
  double c0 = 1.0;
  double a0 = 1.0;
  double b0 = 0.5;
  double beta = 1.0;
  double chi = 1.0;
  double tau = 1.0;
  double mu = 50.0;
  double lambda = 100.0;

  /// Composite density phi*rho_f + (1-phi)*rho_s.
  double rho() const { return porosity * rho_f + (1.0 - porosity) * rho_s; }
  /// Added-mass coefficient (nu/phi)*rho_f.
  double rho_w() const { return tortuosity / porosity * rho_f; }

  /// Sets mu and lambda from Young's modulus and Poisson's ratio.
  void set_young_poisson(double young, double poisson);

  /// Throws ConfigError naming the first violated positivity condition.
  void validate() const;
};

/// Derived per-material matrices. Symmetric tensors use the stored
/// coordinates (xx, yy, sqrt(2) xy) so the Euclidean product of stored
/// vectors equals the Frobenius product.
struct CoefficientMatrices {
  Eigen::Matrix3d R;           // solid, fluid, heat-flux blocks
  Eigen::Matrix2d Q;           // pressure, temperature
  Eigen::Matrix3d compliance;  // A = C^{-1} in stored coordinates
  Eigen::Matrix3d stiffness;   // C in stored coordinates
  Eigen::Vector3d damping;     // (0, eta/kappa, 1/chi)
  double mu = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

CoefficientMatrices derive_matrices(const MaterialParameters& p);

/// 2 mu z + lambda tr(z) I.
Sym2 hooke_apply(const Sym2& z, double mu, double lambda);
/// (1/2mu) (t - lambda/(2mu + 2lambda) tr(t) I).
Sym2 compliance_apply(const Sym2& t, double mu, double lambda);

struct SpectralBounds {
  double rho_min = 0.0;
  double rho_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double hooke_min = 0.0;  // 2 mu
  double hooke_max = 0.0;  // 2 mu + 2 lambda
  double a_min = 0.0;      // H2-norm equivalence constants
  double a_max = 0.0;
};

SpectralBounds spectral_bounds(const CoefficientMatrices& m);

/// Built-in parameter sets: "L1", "L2-repaired", "L3", "L4", and "L3-literal",
/// "L4-literal" with the storage and heat-capacity values as printed.
MaterialParameters named_parameter_set(std::string_view name);
std::vector<std::string> named_parameter_sets();

/// Region tag -> material.
class MaterialField {
 public:
  MaterialField() = default;
  explicit MaterialField(const MaterialParameters& homogeneous);

  void set(int region, const MaterialParameters& params);
  bool contains(int region) const { return entries_.count(region) > 0; }
  const MaterialParameters& parameters(int region) const;
  const CoefficientMatrices& matrices(int region) const;
  std::vector<int> regions() const;

  /// Throws if any of `tags` has no entry.
  void check_covers(const std::vector<int>& tags) const;

 private:
  struct Entry {
    MaterialParameters params;
    CoefficientMatrices matrices;
  };
  std::map<int, Entry> entries_;
};

}  // namespace tphdg
