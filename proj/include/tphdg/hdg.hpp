// HDG discretization: element operators, static condensation, loads, traces.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

#include "tphdg/fespace.hpp"
#include "tphdg/mesh.hpp"
#include "tphdg/model.hpp"

namespace tphdg {

/// Index layout of the element and trace unknowns for polynomial degree k.
///
/// Element vector X_K: six velocity components [u_x, u_y, q_x, q_y, r_x, r_y]
/// in P_{k+1} (component c = 2a + d), then five stress-like components
/// [sigma_xx, sigma_yy, sqrt(2) sigma_xy, p, theta] in P_k.
/// Trace vector on a face: the same six velocity components in P_{k+1}(F).
struct DofLayout {
  int k = 0;
  int nv = 0;  // dim P_{k+1}(K)
  int ns = 0;  // dim P_k(K)
  int nf = 0;  // dim P_{k+1}(F)

  DofLayout() = default;
  explicit DofLayout(int degree);

  int volume_size() const { return 6 * nv + 5 * ns; }
  int local_trace_size() const { return 18 * nf; }
  int face_size() const { return 6 * nf; }
  int velocity(int c) const { return c * nv; }
  int theta_block(int c) const { return 6 * nv + c * ns; }
  int local_trace(int local_face, int c) const { return local_face * 6 * nf + c * nf; }
};

enum class ExecutionPolicy { serial, parallel };

struct AssemblyOptions {
  ExecutionPolicy policy = ExecutionPolicy::parallel;
  bool cache = true;                 // share operators between congruent elements
  double stabilization_sign = 1.0;   // debug hook; -1 breaks the energy identity
  int quad_order = -1;               // default 2(k+2)+1
};

int default_quad_order(int k);

/// Global trace numbering: dof(f, c, j) = f*6nf + c*nf + j. The u-components
/// on boundary faces are Dirichlet dofs; everything else is free.
class TraceMap {
 public:
  TraceMap() = default;
  TraceMap(const Mesh& mesh, const DofLayout& layout);

  int size() const { return static_cast<int>(free_index_.size()); }
  int num_free() const { return num_free_; }
  int num_dirichlet() const { return size() - num_free_; }
  bool dirichlet(int dof) const { return free_index_[dof] < 0; }
  /// Position among free dofs, or -1.
  int free_index(int dof) const { return free_index_[dof]; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }

 private:
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  int num_free_ = 0;
};

/// Coefficients of all unknowns. X has one column per element; Y holds all
/// face traces in TraceMap order.
struct DiscreteState {
  DofLayout layout;
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;

  DiscreteState() = default;
  DiscreteState(const Mesh& mesh, const DofLayout& layout);

  bool finite() const { return X.allFinite() && Y.allFinite(); }
};

/// Basis tables on the reference element shared by all elements of degree k.
struct ReferenceTables {
  int k = 0;
  int order = 0;
  QuadratureRule volume;
  Eigen::MatrixXd values;  // points x nv (first ns columns span P_k)
  Eigen::MatrixXd dxi;
  Eigen::MatrixXd deta;
  QuadratureRule1D face;
  // Element basis on local face lf at face point q (local parameter).
  std::array<Eigen::MatrixXd, 3> face_values;
  // Face basis at the local points, same and reversed orientation.
  std::array<Eigen::MatrixXd, 2> face_basis;

  static const ReferenceTables& get(int k, int order);
};

/// Local face orientation: true if the element traverses the face from
/// face.v[0] to face.v[1].
bool same_orientation(const Mesh& mesh, int e, int local_face);

/// Element blocks of the semi-discrete scheme.
///
///   M Xdot + Kxx X + Kxy Y = F,   Kyx X + Kyy Y = g
///
/// with Kxx = [[D + Svv, G^T], [-G, 0]], Kxy = [[-Svh], [-H]],
/// Kyx = [-Svh^T, H^T], Kyy = Shh.
struct LocalOperator {
  Eigen::MatrixXd mass;  // volume x volume
  Eigen::VectorXd damping;  // diagonal, velocity rows only non-zero
  Eigen::MatrixXd G;     // 5ns x 6nv
  Eigen::MatrixXd H;     // 5ns x 18nf
  Eigen::MatrixXd Svv;   // 6nv x 6nv
  Eigen::MatrixXd Svh;   // 6nv x 18nf
  Eigen::VectorXd Shh;   // 18nf diagonal

  Eigen::MatrixXd Kxx() const;
  Eigen::MatrixXd Kxy() const;
  Eigen::MatrixXd Kyx() const;
};

LocalOperator assemble_local(const Mesh& mesh, int e, const CoefficientMatrices& m,
                             const DofLayout& layout, const AssemblyOptions& opt = {});

/// B_h(Phi, (v, vhat)) for one element; phi is the Theta part of an element
/// vector, v its velocity part, vhat the element-local trace vector.
double local_bh(const LocalOperator& op, const DofLayout& layout, const Eigen::VectorXd& x_phi,
                const Eigen::VectorXd& x_v, const Eigen::VectorXd& y_v);

/// Gathers the element-local trace vector of element e from a global one.
Eigen::VectorXd gather_trace(const Mesh& mesh, const DofLayout& layout, int e,
                             const Eigen::VectorXd& Y);

// Right-hand side data -------------------------------------------------------

/// Volume sources at (x, t) in region: writes 11 values
/// [F_s(2), F_f(2), F_r(2), G_sigma stored (3), g_p, g].
using VolumeSource = std::function<void(const Point&, double, int, double*)>;
/// Time-independent spatial part of a separable source.
using SpatialSource = std::function<void(const Point&, int, double*)>;
/// Boundary data at (x, t): writes [u_x, u_y, p, theta].
using BoundaryFunction = std::function<void(const Point&, double, double*)>;

struct SeparableLoad {
  std::function<double(double)> amplitude;
  Eigen::MatrixXd spatial;  // volume x elements
};

struct ProblemData {
  VolumeSource source;                  // may be empty
  std::vector<SeparableLoad> separable;
  BoundaryFunction boundary;            // empty means homogeneous
};

/// Element load vectors (volume x elements) of a time-dependent source.
Eigen::MatrixXd assemble_volume_loads(const Mesh& mesh, const MaterialField& materials,
                                      const DofLayout& layout, const VolumeSource& f, double t,
                                      int quad_order = -1,
                                      ExecutionPolicy policy = ExecutionPolicy::parallel);
Eigen::MatrixXd assemble_spatial_loads(const Mesh& mesh, const MaterialField& materials,
                                       const DofLayout& layout, const SpatialSource& f,
                                       int quad_order = -1);
/// All volume loads of `data` at time t.
Eigen::MatrixXd assemble_loads(const Mesh& mesh, const MaterialField& materials,
                               const DofLayout& layout, const ProblemData& data, double t,
                               int quad_order = -1,
                               ExecutionPolicy policy = ExecutionPolicy::parallel);

/// Face right-hand side of the hat equation from pressure and temperature
/// boundary data: -<p_D n, w_hat> - <theta_D n, s_hat> on boundary faces.
Eigen::VectorXd assemble_boundary_rhs(const Mesh& mesh, const DofLayout& layout,
                                      const BoundaryFunction& bd, double t, int quad_order = -1);
/// Trace vector holding Pi_F u_D on the Dirichlet dofs, zero elsewhere.
Eigen::VectorXd dirichlet_traces(const Mesh& mesh, const DofLayout& layout,
                                 const BoundaryFunction& bd, double t, int quad_order = -1);

// Condensed system ------------------------------------------------------------

/// One implicit stage of the theta-scheme
///   M (X* - X^n) / (theta dt) + Kxx X* + Kxy Y* = F(t*),  Kyx X* + Kyy Y* = g(t*)
/// with the element unknowns eliminated onto the free traces.
class CondensedSystem {
 public:
  CondensedSystem(const Mesh& mesh, const MaterialField& materials, int k, double dt,
                  double theta = 0.5, const AssemblyOptions& opt = {});
  ~CondensedSystem();

  const Mesh& mesh() const { return *mesh_; }
  const DofLayout& layout() const { return layout_; }
  const TraceMap& traces() const { return traces_; }
  const AssemblyOptions& options() const { return opt_; }
  double dt() const { return dt_; }
  double theta() const { return theta_; }

  /// Free x free trace matrix.
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  /// "cholesky" or "lu" (used when the Cholesky factorization breaks down).
  const char* solver_kind() const;
  /// Number of distinct element operators after sharing.
  int num_operators() const { return static_cast<int>(ops_.size()); }
  const LocalOperator& local_operator(int e) const { return ops_[rep_[e]]->op; }

  /// Solves one stage. F: element loads at t*, g: hat-equation RHS (global
  /// trace vector), Yd: trace vector whose Dirichlet entries are imposed.
  void solve_stage(const Eigen::MatrixXd& Xn, const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                   const Eigen::VectorXd& Yd, Eigen::MatrixXd& Xs, Eigen::VectorXd& Ys) const;

  /// Traces satisfying the hat equation for given element values:
  /// Y = Kyy^{-1} (g - sum_K Kyx X_K) on free dofs, Yd on Dirichlet dofs.
  Eigen::VectorXd recover_traces(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                                 const Eigen::VectorXd& Yd) const;

  /// Element residual of the eliminated equations for a computed stage.
  double reconstruction_residual(const Eigen::MatrixXd& Xn, const Eigen::MatrixXd& F,
                                 const Eigen::MatrixXd& Xs, const Eigen::VectorXd& Ys) const;

 private:
  struct TraceSolver;
  struct Element {
    LocalOperator op;
    Eigen::MatrixXd A;      // M/(theta dt) + Kxx
    Eigen::VectorXd scale;  // diag(A)^{-1/2}
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of the scaled A
    Eigen::MatrixXd W;     // A^{-1} Kxy
    Eigen::MatrixXd Kyx;
    Eigen::MatrixXd schur; // Kyy - Kyx W

    template <class M>
    Eigen::MatrixXd solve(const M& b) const {
      return scale.asDiagonal() * lu.solve(scale.asDiagonal() * b);
    }
  };

  void build();
  bool parallel() const { return opt_.policy == ExecutionPolicy::parallel; }

  const Mesh* mesh_;
  const MaterialField* materials_;
  DofLayout layout_;
  TraceMap traces_;
  double dt_;
  double theta_;
  AssemblyOptions opt_;
  std::vector<int> rep_;  // element -> index into ops_
  std::vector<std::unique_ptr<Element>> ops_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseMatrix<double> coupling_;  // free x dirichlet
  std::vector<int> dirichlet_dofs_;
  std::unique_ptr<TraceSolver> solver_;
};

// State evaluation and diagnostics ---------------------------------------------

/// Values of all 11 fields of element e at a physical point:
/// [u(2), q(2), r(2), sigma_xx, sigma_yy, sigma_xy, p, theta].
std::array<double, 11> evaluate_state(const Mesh& mesh, const DofLayout& layout,
                                      const Eigen::MatrixXd& X, int e, const Point& x);

/// Numerical traces from element values:
///   u_hat = mean(u) - (h_F/(k+1)^2) mean((sigma - (alpha p + beta theta) I) n)
///   q_hat = mean(q) + (h_F/(k+1)^2) mean(p n), r_hat likewise with theta,
/// projected onto P_{k+1}(F). On boundary faces u_hat = Pi_F u_D and the
/// one-sided q_hat, r_hat use p - p_D and theta - theta_D.
Eigen::VectorXd numerical_flux(const Mesh& mesh, const MaterialField& materials,
                               const DofLayout& layout, const Eigen::MatrixXd& X,
                               const BoundaryFunction& bd = {}, double t = 0.0,
                               double stabilization_sign = 1.0, int quad_order = -1);

/// 1/2 (u R, u) + 1/2 (Theta, Theta)_{A,Q}.
double discrete_energy(const Mesh& mesh, const MaterialField& materials, const DofLayout& layout,
                       const Eigen::MatrixXd& X);
/// (eta/kappa) |q|^2 + (1/chi) |r|^2.
double damping_form(const Mesh& mesh, const MaterialField& materials, const DofLayout& layout,
                    const Eigen::MatrixXd& X);
/// sum_K sum_{F in dK} (k+1)^2/h_F |u - u_hat|^2_F by face quadrature.
double stabilization_form(const Mesh& mesh, const DofLayout& layout, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& Y, int quad_order = -1);

}  // namespace tphdg
