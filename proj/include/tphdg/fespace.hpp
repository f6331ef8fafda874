// Polynomial bases, quadrature and L2 projections on triangles and edges.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "tphdg/mesh.hpp"

namespace tphdg {

/// Dimension of P_l on a triangle.
constexpr int dim_p2(int degree) { return (degree + 1) * (degree + 2) / 2; }
/// Dimension of P_l on an edge.
constexpr int dim_p1(int degree) { return degree + 1; }

inline constexpr int kMaxQuadratureOrder = 61;

/// Quadrature on the reference triangle {(0,0),(1,0),(0,1)}.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int order = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Quadrature on the unit segment [0,1].
struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;
  int order = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Collapsed (Duffy) Gauss-Legendre rule, exact for total degree `order`.
QuadratureRule quadrature_simplex(int order);
/// Gauss-Legendre rule on [0,1], exact for degree `order`.
QuadratureRule1D quadrature_segment(int order);

/// Legendre polynomial P_n(x) and its derivative on [-1,1].
void legendre(int n, double x, double* values, double* derivatives = nullptr);

/// Hierarchical L2-orthonormal basis of P_l on the reference triangle. The
/// first dim_p2(m) functions span P_m for every m <= l.
class ScalarBasis {
 public:
  explicit ScalarBasis(int degree);

  /// Shared immutable instance.
  static const ScalarBasis& get(int degree);

  int degree() const { return degree_; }
  int size() const { return dim_; }

  void eval(double xi, double eta, double* values) const;
  void eval_grad(double xi, double eta, double* values, double* dxi, double* deta) const;

 private:
  void raw(double xi, double eta, double* values, double* dxi, double* deta) const;

  int degree_;
  int dim_;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd coeffs_;  // orthonormal = coeffs_ * raw Legendre products
};

/// Orthonormal Legendre basis on [0,1]: sqrt(2j+1) P_j(2s-1).
void face_basis_eval(int degree, double s, double* values);

/// Affine map from the reference triangle to element e.
struct ElementGeometry {
  Point origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse_jacobian;
  double det = 0.0;

  ElementGeometry() = default;
  ElementGeometry(const Mesh& mesh, int e);

  Point map(double xi, double eta) const;
  std::array<double, 2> to_reference(const Point& p) const;
};

/// Orthonormal basis of P_l(K) evaluated at a physical point of element K.
void element_basis_eval(const ScalarBasis& basis, const ElementGeometry& geo, const Point& p,
                        double* values);

/// Reference basis tabulated at quadrature points.
struct Tabulation {
  Eigen::MatrixXd values;  // points x basis
  Eigen::MatrixXd dxi;
  Eigen::MatrixXd deta;

  Tabulation(const ScalarBasis& basis, const QuadratureRule& rule);
};

/// Field sampled at a physical point; writes `ncomp` values.
using FieldFunction = std::function<void(const Point&, double*)>;

/// Coefficients (dim x ncomp) of the L2(K) projection onto P_l(K).
Eigen::MatrixXd project_element(const Mesh& mesh, int e, int degree, int ncomp,
                                const FieldFunction& f, int quad_order = -1);
/// Coefficients ((l+1) x ncomp) of the L2(F) projection onto P_l(F), in the
/// face parameter running from face.v[0] to face.v[1].
Eigen::MatrixXd project_face(const Mesh& mesh, int face, int degree, int ncomp,
                             const FieldFunction& f, int quad_order = -1);

/// Evaluates an element expansion (dim x ncomp) at a physical point.
Eigen::VectorXd evaluate_element(const Mesh& mesh, int e, int degree,
                                 const Eigen::Ref<const Eigen::MatrixXd>& coeffs, const Point& p);

/// ||f - Pi f||_{0,T_h} and ||h_F^{1/2}/(l+1) (f - Pi f)||_{0,dT_h}.
struct ProjectionError {
  double volume = 0.0;
  double boundary = 0.0;
};
ProjectionError projection_error(const Mesh& mesh, int degree, const FieldFunction& f);

struct ProjectionRateRow {
  int level = 0;
  double h = 0.0;
  double volume_error = 0.0;
  double boundary_error = 0.0;
  double volume_rate = 0.0;    // NaN when not applicable
  double boundary_rate = 0.0;  // NaN when not applicable
};

/// Projection errors of a scalar field on a sequence of meshes with observed
/// rates between consecutive levels.
std::vector<ProjectionRateRow> projection_rate_report(const FieldFunction& f,
                                                      const std::vector<Mesh>& meshes, int degree);

/// Largest observed ||h_F^{1/2}/(l+1) q||_{0,dT_h} / ||q||_{0,T_h} over random
/// q in P_l(T_h).
double trace_inequality_ratio(const Mesh& mesh, int degree, int trials, std::uint64_t seed);

}  // namespace tphdg
