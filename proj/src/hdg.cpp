#include "tphdg/hdg.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef TPHDG_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "tphdg/error.hpp"
#include "tphdg/parallel.hpp"

namespace tphdg {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Reference coordinates of local face lf at local parameter s.
std::array<double, 2> face_point(int lf, double s) {
  switch (lf) {
    case 0: return {s, 0.0};
    case 1: return {1.0 - s, s};
    default: return {0.0, 1.0 - s};
  }
}

struct FaceTerm {
  int row;  // Theta component
  int col;  // velocity component
  double coef;
};

// Coefficients of the element-face part of B_h, -<(tau - (alpha z + beta phi) I) n, v>
// + <z n, w> + <phi n, s>, in stored coordinates.
std::array<FaceTerm, 12> face_terms(const Point& n, double alpha, double beta) {
  return {{{0, 0, -n.x},
           {1, 1, -n.y},
           {2, 0, -kInvSqrt2 * n.y},
           {2, 1, -kInvSqrt2 * n.x},
           {3, 0, alpha * n.x},
           {3, 1, alpha * n.y},
           {4, 0, beta * n.x},
           {4, 1, beta * n.y},
           {3, 2, n.x},
           {3, 3, n.y},
           {4, 4, n.x},
           {4, 5, n.y}}};
}

int global_trace_dof(const Mesh& mesh, const DofLayout& layout, int e, int local) {
  const int fs = layout.face_size();
  const int lf = local / fs;
  return mesh.element_faces(e)[lf] * fs + local % fs;
}

}  // namespace

DofLayout::DofLayout(int degree)
    : k(degree), nv(dim_p2(degree + 1)), ns(dim_p2(degree)), nf(dim_p1(degree + 1)) {
  TPHDG_REQUIRE(degree >= 0, "DofLayout: polynomial degree must be >= 0");
}

int default_quad_order(int k) { return 2 * (k + 2) + 1; }

TraceMap::TraceMap(const Mesh& mesh, const DofLayout& layout) {
  const int fs = layout.face_size();
  free_index_.assign(static_cast<std::size_t>(mesh.num_faces()) * fs, -1);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const bool boundary = mesh.face(f).boundary();
    for (int c = 0; c < 6; ++c) {
      if (boundary && c < 2) continue;
      for (int j = 0; j < layout.nf; ++j) {
        const int dof = f * fs + c * layout.nf + j;
        free_index_[dof] = num_free_++;
        free_dofs_.push_back(dof);
      }
    }
  }
}

DiscreteState::DiscreteState(const Mesh& mesh, const DofLayout& l)
    : layout(l),
      X(Eigen::MatrixXd::Zero(l.volume_size(), mesh.num_elements())),
      Y(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_faces()) * l.face_size())) {}

const ReferenceTables& ReferenceTables::get(int k, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<ReferenceTables>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{k, order}];
  if (slot) return *slot;
  auto t = std::make_unique<ReferenceTables>();
  t->k = k;
  t->order = order;
  const ScalarBasis& basis = ScalarBasis::get(k + 1);
  const int nv = basis.size();
  const int nf = k + 2;
  t->volume = quadrature_simplex(order);
  Tabulation tab(basis, t->volume);
  t->values = tab.values;
  t->dxi = tab.dxi;
  t->deta = tab.deta;
  t->face = quadrature_segment(order);
  const int nq = t->face.size();
  std::vector<double> v(nv), mu(nf);
  for (int lf = 0; lf < 3; ++lf) {
    t->face_values[lf].resize(nq, nv);
    for (int q = 0; q < nq; ++q) {
      const auto p = face_point(lf, t->face.points[q]);
      basis.eval(p[0], p[1], v.data());
      for (int i = 0; i < nv; ++i) t->face_values[lf](q, i) = v[i];
    }
  }
  for (int o = 0; o < 2; ++o) {
    t->face_basis[o].resize(nq, nf);
    for (int q = 0; q < nq; ++q) {
      const double s = t->face.points[q];
      face_basis_eval(k + 1, o == 0 ? s : 1.0 - s, mu.data());
      for (int j = 0; j < nf; ++j) t->face_basis[o](q, j) = mu[j];
    }
  }
  slot = std::move(t);
  return *slot;
}

bool same_orientation(const Mesh& mesh, int e, int local_face) {
  return mesh.triangle(e)[local_face] == mesh.face(mesh.element_faces(e)[local_face]).v[0];
}

Eigen::MatrixXd LocalOperator::Kxx() const {
  const Eigen::Index nvel = Svv.rows();
  const Eigen::Index nth = G.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nvel + nth, nvel + nth);
  K.topLeftCorner(nvel, nvel) = Svv;
  K.topLeftCorner(nvel, nvel).diagonal() += damping.head(nvel);
  K.topRightCorner(nvel, nth) = G.transpose();
  K.bottomLeftCorner(nth, nvel) = -G;
  return K;
}

Eigen::MatrixXd LocalOperator::Kxy() const {
  Eigen::MatrixXd K(Svh.rows() + H.rows(), Svh.cols());
  K << -Svh, -H;
  return K;
}

Eigen::MatrixXd LocalOperator::Kyx() const {
  Eigen::MatrixXd K(Svh.cols(), Svh.rows() + H.rows());
  K << -Svh.transpose(), H.transpose();
  return K;
}

LocalOperator assemble_local(const Mesh& mesh, int e, const CoefficientMatrices& m,
                             const DofLayout& layout, const AssemblyOptions& opt) {
  const int k = layout.k;
  const int nv = layout.nv, ns = layout.ns, nf = layout.nf;
  const int order = opt.quad_order > 0 ? opt.quad_order : default_quad_order(k);
  const ReferenceTables& T = ReferenceTables::get(k, order);
  const ElementGeometry geo(mesh, e);
  const int nx = layout.volume_size();
  const int ny = layout.local_trace_size();

  LocalOperator op;
  op.mass = Eigen::MatrixXd::Zero(nx, nx);
  for (int a1 = 0; a1 < 3; ++a1)
    for (int a2 = 0; a2 < 3; ++a2)
      for (int d = 0; d < 2; ++d)
        op.mass.block(layout.velocity(2 * a1 + d), layout.velocity(2 * a2 + d), nv, nv)
            .diagonal()
            .setConstant(m.R(a1, a2));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      op.mass.block(layout.theta_block(i), layout.theta_block(j), ns, ns)
          .diagonal()
          .setConstant(m.compliance(i, j));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      op.mass.block(layout.theta_block(3 + i), layout.theta_block(3 + j), ns, ns)
          .diagonal()
          .setConstant(m.Q(i, j));

  op.damping = Eigen::VectorXd::Zero(nx);
  for (int c = 0; c < 6; ++c) op.damping.segment(layout.velocity(c), nv).setConstant(m.damping(c / 2));

  // Volume part of B_h.
  const Eigen::Matrix2d& Ji = geo.inverse_jacobian;
  const Eigen::MatrixXd Dx = T.dxi * Ji(0, 0) + T.deta * Ji(1, 0);
  const Eigen::MatrixXd Dy = T.dxi * Ji(0, 1) + T.deta * Ji(1, 1);
  const Eigen::Map<const Eigen::VectorXd> w(T.volume.weights.data(), T.volume.size());
  const Eigen::MatrixXd PsiW = w.asDiagonal() * T.values.leftCols(ns);
  const Eigen::MatrixXd Ix = PsiW.transpose() * Dx;
  const Eigen::MatrixXd Iy = PsiW.transpose() * Dy;

  op.G = Eigen::MatrixXd::Zero(5 * ns, 6 * nv);
  auto G = [&](int r, int c) { return op.G.block(r * ns, c * nv, ns, nv); };
  G(0, 0) += Ix;
  G(1, 1) += Iy;
  G(2, 0) += kInvSqrt2 * Iy;
  G(2, 1) += kInvSqrt2 * Ix;
  G(3, 0) -= m.alpha * Ix;
  G(3, 1) -= m.alpha * Iy;
  G(4, 0) -= m.beta * Ix;
  G(4, 1) -= m.beta * Iy;
  G(3, 2) -= Ix;
  G(3, 3) -= Iy;
  G(4, 4) -= Ix;
  G(4, 5) -= Iy;

  op.H = Eigen::MatrixXd::Zero(5 * ns, ny);
  op.Svv = Eigen::MatrixXd::Zero(6 * nv, 6 * nv);
  op.Svh = Eigen::MatrixXd::Zero(6 * nv, ny);
  op.Shh = Eigen::VectorXd::Zero(ny);
  const Eigen::Map<const Eigen::VectorXd> w1(T.face.weights.data(), T.face.size());
  for (int lf = 0; lf < 3; ++lf) {
    const int fid = mesh.element_faces(e)[lf];
    const double hf = mesh.face_diameter(fid);
    const Point n = mesh.outward_normal(e, lf);
    const double tau = opt.stabilization_sign * (k + 1.0) * (k + 1.0) / hf;
    const Eigen::MatrixXd& Fv = T.face_values[lf];
    const Eigen::MatrixXd& Fb = T.face_basis[same_orientation(mesh, e, lf) ? 0 : 1];
    const Eigen::MatrixXd FvW = w1.asDiagonal() * Fv;
    const double svv = hf / geo.det;
    const double svh = std::sqrt(hf / geo.det);
    const Eigen::MatrixXd Vv = svv * (FvW.transpose() * Fv);
    const Eigen::MatrixXd Vh = svh * (FvW.transpose() * Fb);

    for (const FaceTerm& t : face_terms(n, m.alpha, m.beta)) {
      op.G.block(t.row * ns, t.col * nv, ns, nv) += t.coef * Vv.topRows(ns);
      op.H.block(t.row * ns, layout.local_trace(lf, t.col), ns, nf) -= t.coef * Vh.topRows(ns);
    }
    for (int c = 0; c < 6; ++c) {
      op.Svv.block(c * nv, c * nv, nv, nv) += tau * Vv;
      op.Svh.block(c * nv, layout.local_trace(lf, c), nv, nf) += tau * Vh;
      op.Shh.segment(layout.local_trace(lf, c), nf).setConstant(tau);
    }
  }
  return op;
}

double local_bh(const LocalOperator& op, const DofLayout& layout, const Eigen::VectorXd& x_phi,
                const Eigen::VectorXd& x_v, const Eigen::VectorXd& y_v) {
  const Eigen::VectorXd phi = x_phi.tail(5 * layout.ns);
  const Eigen::VectorXd v = x_v.head(6 * layout.nv);
  return phi.dot(op.G * v) + phi.dot(op.H * y_v);
}

Eigen::VectorXd gather_trace(const Mesh& mesh, const DofLayout& layout, int e,
                             const Eigen::VectorXd& Y) {
  const int fs = layout.face_size();
  Eigen::VectorXd y(layout.local_trace_size());
  for (int lf = 0; lf < 3; ++lf) y.segment(lf * fs, fs) = Y.segment(mesh.element_faces(e)[lf] * fs, fs);
  return y;
}

// Loads ---------------------------------------------------------------------

namespace {

Eigen::VectorXd element_load(const Mesh& mesh, int e, const CoefficientMatrices& m,
                             const DofLayout& layout, const ReferenceTables& T,
                             const std::function<void(const Point&, double*)>& f) {
  const ElementGeometry geo(mesh, e);
  const double sdet = std::sqrt(geo.det);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.volume_size());
  double v[11];
  for (int q = 0; q < T.volume.size(); ++q) {
    const auto& p = T.volume.points[q];
    f(geo.map(p[0], p[1]), v);
    const double w = T.volume.weights[q] * sdet;
    const auto phi = T.values.row(q);
    for (int c = 0; c < 6; ++c)
      if (v[c] != 0.0) out.segment(layout.velocity(c), layout.nv) += (w * v[c]) * phi.transpose();
    const Eigen::Vector3d s = m.compliance * Eigen::Vector3d(v[6], v[7], v[8]);
    const double th[5] = {s[0], s[1], s[2], v[9], v[10]};
    for (int c = 0; c < 5; ++c)
      if (th[c] != 0.0)
        out.segment(layout.theta_block(c), layout.ns) +=
            (w * th[c]) * phi.head(layout.ns).transpose();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd assemble_volume_loads(const Mesh& mesh, const MaterialField& materials,
                                      const DofLayout& layout, const VolumeSource& f, double t,
                                      int quad_order, ExecutionPolicy policy) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(layout.volume_size(), mesh.num_elements());
  if (!f) return F;
  const ReferenceTables& T =
      ReferenceTables::get(layout.k, quad_order > 0 ? quad_order : default_quad_order(layout.k));
  parallel_for(mesh.num_elements(), policy == ExecutionPolicy::parallel, [&](int e) {
    const int region = mesh.region(e);
    F.col(e) = element_load(mesh, e, materials.matrices(region), layout, T,
                            [&](const Point& x, double* v) { f(x, t, region, v); });
  });
  return F;
}

Eigen::MatrixXd assemble_spatial_loads(const Mesh& mesh, const MaterialField& materials,
                                       const DofLayout& layout, const SpatialSource& f,
                                       int quad_order) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(layout.volume_size(), mesh.num_elements());
  const ReferenceTables& T =
      ReferenceTables::get(layout.k, quad_order > 0 ? quad_order : default_quad_order(layout.k));
  parallel_for(mesh.num_elements(), true, [&](int e) {
    const int region = mesh.region(e);
    F.col(e) = element_load(mesh, e, materials.matrices(region), layout, T,
                            [&](const Point& x, double* v) { f(x, region, v); });
  });
  return F;
}

Eigen::MatrixXd assemble_loads(const Mesh& mesh, const MaterialField& materials,
                               const DofLayout& layout, const ProblemData& data, double t,
                               int quad_order, ExecutionPolicy policy) {
  Eigen::MatrixXd F =
      assemble_volume_loads(mesh, materials, layout, data.source, t, quad_order, policy);
  for (const auto& s : data.separable) F += s.amplitude(t) * s.spatial;
  return F;
}

Eigen::VectorXd assemble_boundary_rhs(const Mesh& mesh, const DofLayout& layout,
                                      const BoundaryFunction& bd, double t, int quad_order) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_faces()) *
                                            layout.face_size());
  if (!bd) return g;
  const QuadratureRule1D rule =
      quadrature_segment(quad_order > 0 ? quad_order : default_quad_order(layout.k));
  std::vector<double> mu(layout.nf);
  double v[4];
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.boundary()) continue;
    const Point n = mesh.outward_normal(face.elem[0], face.local[0]);
    const Point a = mesh.vertex(face.v[0]);
    const Point b = mesh.vertex(face.v[1]);
    const double sl = std::sqrt(mesh.face_diameter(f));
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points[q];
      bd(a + s * (b - a), t, v);
      face_basis_eval(layout.k + 1, s, mu.data());
      const double w = rule.weights[q] * sl;
      const double nn[2] = {n.x, n.y};
      for (int d = 0; d < 2; ++d)
        for (int j = 0; j < layout.nf; ++j) {
          g[f * layout.face_size() + (2 + d) * layout.nf + j] -= w * v[2] * nn[d] * mu[j];
          g[f * layout.face_size() + (4 + d) * layout.nf + j] -= w * v[3] * nn[d] * mu[j];
        }
    }
  }
  return g;
}

Eigen::VectorXd dirichlet_traces(const Mesh& mesh, const DofLayout& layout,
                                 const BoundaryFunction& bd, double t, int quad_order) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_faces()) *
                                            layout.face_size());
  if (!bd) return y;
  const QuadratureRule1D rule =
      quadrature_segment(quad_order > 0 ? quad_order : default_quad_order(layout.k));
  std::vector<double> mu(layout.nf);
  double v[4];
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.boundary()) continue;
    const Point a = mesh.vertex(face.v[0]);
    const Point b = mesh.vertex(face.v[1]);
    const double sl = std::sqrt(mesh.face_diameter(f));
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points[q];
      bd(a + s * (b - a), t, v);
      face_basis_eval(layout.k + 1, s, mu.data());
      const double w = rule.weights[q] * sl;
      for (int d = 0; d < 2; ++d)
        for (int j = 0; j < layout.nf; ++j)
          y[f * layout.face_size() + d * layout.nf + j] += w * v[d] * mu[j];
    }
  }
  return y;
}

// Condensed system ------------------------------------------------------------

// The trace matrix is symmetric and, for the stable schemes, positive
// definite. It is solved after symmetric diagonal scaling; a Cholesky
// breakdown falls back to sparse LU.
struct CondensedSystem::TraceSolver {
  using SpMat = Eigen::SparseMatrix<double>;
#ifdef TPHDG_HAVE_CHOLMOD
  Eigen::CholmodSupernodalLLT<SpMat> llt;
#else
  Eigen::SimplicialLLT<SpMat> llt;
#endif
  Eigen::SparseLU<SpMat> lu;
  Eigen::VectorXd scale;
  bool use_lu = false;

#ifdef TPHDG_HAVE_CHOLMOD
  TraceSolver() { llt.cholmod().print = 0; }  // indefinite S falls back to LU quietly
#endif

  bool factorize(const SpMat& m) {
    scale.resize(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double d = std::abs(m.coeff(i, i));
      scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    const SpMat s = scale.asDiagonal() * m * scale.asDiagonal();
    llt.compute(s);
    if (llt.info() == Eigen::Success) return true;
    use_lu = true;
    lu.compute(s);
    return lu.info() == Eigen::Success;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const Eigen::VectorXd b = scale.cwiseProduct(rhs);
    const Eigen::VectorXd y = use_lu ? Eigen::VectorXd(lu.solve(b)) : Eigen::VectorXd(llt.solve(b));
    return scale.cwiseProduct(y);
  }
};

CondensedSystem::~CondensedSystem() = default;

const char* CondensedSystem::solver_kind() const {
  return solver_ && solver_->use_lu ? "lu" : "cholesky";
}

CondensedSystem::CondensedSystem(const Mesh& mesh, const MaterialField& materials, int k, double dt,
                                 double theta, const AssemblyOptions& opt)
    : mesh_(&mesh), materials_(&materials), layout_(k), traces_(mesh, layout_), dt_(dt),
      theta_(theta), opt_(opt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("CondensedSystem: time step must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error("CondensedSystem: theta must lie in (0,1]");
  materials.check_covers(mesh.regions());
  build();
}

void CondensedSystem::build() {
  const Mesh& mesh = *mesh_;
  const int ne = mesh.num_elements();
  rep_.assign(ne, -1);
  std::vector<int> rep_elem;
  if (opt_.cache) {
    // Congruent elements with equal region and face orientations share an
    // operator. Keys are built serially, so the representative is always the
    // lowest element id and results do not depend on the thread schedule.
    using Key = std::tuple<int, long long, long long, long long, long long, int>;
    std::map<Key, int> lookup;
    for (int e = 0; e < ne; ++e) {
      const ElementGeometry geo(mesh, e);
      const double scale = geo.jacobian.cwiseAbs().maxCoeff() * 1e-11;
      auto q = [scale](double v) { return static_cast<long long>(std::llround(v / scale)); };
      int flags = 0;
      for (int lf = 0; lf < 3; ++lf) flags |= (same_orientation(mesh, e, lf) ? 1 : 0) << lf;
      const Key key{mesh.region(e), q(geo.jacobian(0, 0)), q(geo.jacobian(0, 1)),
                    q(geo.jacobian(1, 0)), q(geo.jacobian(1, 1)), flags};
      auto [it, inserted] = lookup.try_emplace(key, static_cast<int>(rep_elem.size()));
      if (inserted) rep_elem.push_back(e);
      rep_[e] = it->second;
    }
  } else {
    for (int e = 0; e < ne; ++e) {
      rep_[e] = e;
      rep_elem.push_back(e);
    }
  }

  const int nrep = static_cast<int>(rep_elem.size());
  ops_.resize(nrep);
  const double shift = 1.0 / (theta_ * dt_);
  parallel_for(nrep, parallel(), [&](int r) {
    const int e = rep_elem[r];
    auto el = std::make_unique<Element>();
    el->op = assemble_local(mesh, e, materials_->matrices(mesh.region(e)), layout_, opt_);
    el->A = shift * el->op.mass + el->op.Kxx();
    el->scale = el->A.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
    el->lu.compute(el->scale.asDiagonal() * el->A * el->scale.asDiagonal());
    el->W = el->solve(el->op.Kxy());
    if (!el->W.allFinite()) {
      std::ostringstream msg;
      msg << "CondensedSystem: local factorization failed on element " << e;
      throw Error(msg.str());
    }
    el->Kyx = el->op.Kyx();
    el->schur = -el->Kyx * el->W;
    el->schur.diagonal() += el->op.Shh;
    ops_[r] = std::move(el);
  });

  // Deterministic serial scatter.
  dirichlet_dofs_.clear();
  std::vector<int> dindex(traces_.size(), -1);
  for (int d = 0; d < traces_.size(); ++d)
    if (traces_.dirichlet(d)) {
      dindex[d] = static_cast<int>(dirichlet_dofs_.size());
      dirichlet_dofs_.push_back(d);
    }
  std::vector<Eigen::Triplet<double>> tf, td;
  const int ny = layout_.local_trace_size();
  std::vector<int> g(ny);
  for (int e = 0; e < ne; ++e) {
    const Eigen::MatrixXd& S = ops_[rep_[e]]->schur;
    for (int i = 0; i < ny; ++i) g[i] = global_trace_dof(mesh, layout_, e, i);
    for (int i = 0; i < ny; ++i) {
      const int fi = traces_.free_index(g[i]);
      if (fi < 0) continue;
      for (int j = 0; j < ny; ++j) {
        const double v = S(i, j);
        if (v == 0.0) continue;
        const int fj = traces_.free_index(g[j]);
        if (fj >= 0)
          tf.emplace_back(fi, fj, v);
        else
          td.emplace_back(fi, dindex[g[j]], v);
      }
    }
  }
  matrix_.resize(traces_.num_free(), traces_.num_free());
  matrix_.setFromTriplets(tf.begin(), tf.end());
  coupling_.resize(traces_.num_free(), static_cast<Eigen::Index>(dirichlet_dofs_.size()));
  coupling_.setFromTriplets(td.begin(), td.end());
  if (traces_.num_free() > 0) {
    solver_ = std::make_unique<TraceSolver>();
    if (!solver_->factorize(matrix_))
      throw Error("CondensedSystem: sparse factorization of the trace system failed");
  }
}

void CondensedSystem::solve_stage(const Eigen::MatrixXd& Xn, const Eigen::MatrixXd& F,
                                  const Eigen::VectorXd& g, const Eigen::VectorXd& Yd,
                                  Eigen::MatrixXd& Xs, Eigen::VectorXd& Ys) const {
  const Mesh& mesh = *mesh_;
  const int ne = mesh.num_elements();
  const int fs = layout_.face_size();
  const double shift = 1.0 / (theta_ * dt_);
  Eigen::MatrixXd Z(layout_.volume_size(), ne);
  Eigen::MatrixXd R(layout_.local_trace_size(), ne);
  parallel_for(ne, parallel(), [&](int e) {
    const Element& el = *ops_[rep_[e]];
    const Eigen::VectorXd f = shift * (el.op.mass * Xn.col(e)) + F.col(e);
    Z.col(e) = el.solve(f);
    R.col(e) = el.Kyx * Z.col(e);
  });

  // Per-face gather keeps the summation order fixed.
  Eigen::VectorXd rhs(traces_.num_free());
  parallel_for(mesh.num_faces(), parallel(), [&](int f) {
    const Face& face = mesh.face(f);
    for (int c = 0; c < fs; ++c) {
      const int dof = f * fs + c;
      const int fi = traces_.free_index(dof);
      if (fi < 0) continue;
      double v = g[dof];
      for (int s = 0; s < 2; ++s)
        if (face.elem[s] >= 0) v -= R(face.local[s] * fs + c, face.elem[s]);
      rhs[fi] = v;
    }
  });
  if (!dirichlet_dofs_.empty()) {
    Eigen::VectorXd yd(static_cast<Eigen::Index>(dirichlet_dofs_.size()));
    for (std::size_t i = 0; i < dirichlet_dofs_.size(); ++i) yd[i] = Yd[dirichlet_dofs_[i]];
    rhs -= coupling_ * yd;
  }
  Ys = Yd;
  if (traces_.num_free() > 0) {
    const Eigen::VectorXd y = solver_->solve(rhs);
    for (int i = 0; i < traces_.num_free(); ++i) Ys[traces_.free_dofs()[i]] = y[i];
  }
  Xs.resize(layout_.volume_size(), ne);
  parallel_for(ne, parallel(), [&](int e) {
    Xs.col(e) = Z.col(e) - ops_[rep_[e]]->W * gather_trace(mesh, layout_, e, Ys);
  });
}

Eigen::VectorXd CondensedSystem::recover_traces(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                                                const Eigen::VectorXd& Yd) const {
  const Mesh& mesh = *mesh_;
  const int fs = layout_.face_size();
  Eigen::VectorXd Y = Yd;
  parallel_for(mesh.num_faces(), parallel(), [&](int f) {
    const Face& face = mesh.face(f);
    for (int c = 0; c < fs; ++c) {
      const int dof = f * fs + c;
      if (traces_.dirichlet(dof)) continue;
      double v = g[dof], diag = 0.0;
      for (int s = 0; s < 2; ++s) {
        const int e = face.elem[s];
        if (e < 0) continue;
        const Element& el = *ops_[rep_[e]];
        const int row = face.local[s] * fs + c;
        v -= el.Kyx.row(row).dot(X.col(e));
        diag += el.op.Shh[row];
      }
      Y[dof] = v / diag;
    }
  });
  return Y;
}

double CondensedSystem::reconstruction_residual(const Eigen::MatrixXd& Xn, const Eigen::MatrixXd& F,
                                                const Eigen::MatrixXd& Xs,
                                                const Eigen::VectorXd& Ys) const {
  const double shift = 1.0 / (theta_ * dt_);
  double worst = 0.0;
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    const Element& el = *ops_[rep_[e]];
    const Eigen::VectorXd f = shift * (el.op.mass * Xn.col(e)) + F.col(e);
    const Eigen::VectorXd y = gather_trace(*mesh_, layout_, e, Ys);
    const Eigen::VectorXd rhs = f - el.op.Kxy() * y;
    const Eigen::VectorXd res = el.A * Xs.col(e) - rhs;
    const double scale = std::max({rhs.norm(), (el.A * Xs.col(e)).norm(), 1e-300});
    worst = std::max(worst, res.norm() / scale);
  }
  return worst;
}

// Evaluation and diagnostics ----------------------------------------------------

std::array<double, 11> evaluate_state(const Mesh& mesh, const DofLayout& layout,
                                      const Eigen::MatrixXd& X, int e, const Point& x) {
  const ScalarBasis& basis = ScalarBasis::get(layout.k + 1);
  const ElementGeometry geo(mesh, e);
  Eigen::VectorXd phi(layout.nv);
  element_basis_eval(basis, geo, x, phi.data());
  std::array<double, 11> v{};
  const auto col = X.col(e);
  for (int c = 0; c < 6; ++c) v[c] = col.segment(layout.velocity(c), layout.nv).dot(phi);
  for (int c = 0; c < 5; ++c)
    v[6 + c] = col.segment(layout.theta_block(c), layout.ns).dot(phi.head(layout.ns));
  v[8] *= kInvSqrt2;
  return v;
}

Eigen::VectorXd numerical_flux(const Mesh& mesh, const MaterialField& materials,
                               const DofLayout& layout, const Eigen::MatrixXd& X,
                               const BoundaryFunction& bd, double t, double stabilization_sign,
                               int quad_order) {
  const int fs = layout.face_size();
  const int nf = layout.nf;
  const QuadratureRule1D rule =
      quadrature_segment(quad_order > 0 ? quad_order : default_quad_order(layout.k));
  Eigen::VectorXd Y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_faces()) * fs);
  std::vector<double> mu(nf);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const Point a = mesh.vertex(face.v[0]);
    const Point b = mesh.vertex(face.v[1]);
    const double hf = mesh.face_diameter(f);
    const double inv_tau = hf / (stabilization_sign * (layout.k + 1.0) * (layout.k + 1.0));
    const double sl = std::sqrt(hf);
    const int sides = face.boundary() ? 1 : 2;
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points[q];
      const Point x = a + s * (b - a);
      double data[4] = {0.0, 0.0, 0.0, 0.0};
      if (face.boundary() && bd) bd(x, t, data);
      double val[6] = {0, 0, 0, 0, 0, 0};
      for (int side = 0; side < sides; ++side) {
        const int e = face.elem[side];
        const Point n = mesh.outward_normal(e, face.local[side]);
        const auto& m = materials.matrices(mesh.region(e));
        const auto v = evaluate_state(mesh, layout, X, e, x);
        double p = v[9], th = v[10];
        if (face.boundary()) {
          p -= data[2];
          th -= data[3];
        }
        const double iso = m.alpha * p + m.beta * th;
        const double tn[2] = {(v[6] - iso) * n.x + v[8] * n.y, v[8] * n.x + (v[7] - iso) * n.y};
        const double nn[2] = {n.x, n.y};
        for (int d = 0; d < 2; ++d) {
          val[d] += (v[d] - inv_tau * tn[d]) / sides;
          val[2 + d] += (v[2 + d] + inv_tau * p * nn[d]) / sides;
          val[4 + d] += (v[4 + d] + inv_tau * th * nn[d]) / sides;
        }
      }
      if (face.boundary()) {
        val[0] = data[0];
        val[1] = data[1];
      }
      face_basis_eval(layout.k + 1, s, mu.data());
      const double w = rule.weights[q] * sl;
      for (int c = 0; c < 6; ++c)
        for (int j = 0; j < nf; ++j) Y[f * fs + c * nf + j] += w * val[c] * mu[j];
    }
  }
  return Y;
}

double discrete_energy(const Mesh& mesh, const MaterialField& materials, const DofLayout& layout,
                       const Eigen::MatrixXd& X) {
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& m = materials.matrices(mesh.region(e));
    const auto col = X.col(e);
    double s = 0.0;
    for (int i = 0; i < layout.nv; ++i)
      for (int d = 0; d < 2; ++d) {
        const Eigen::Vector3d u(col[layout.velocity(d) + i], col[layout.velocity(2 + d) + i],
                                col[layout.velocity(4 + d) + i]);
        s += u.dot(m.R * u);
      }
    for (int i = 0; i < layout.ns; ++i) {
      const Eigen::Vector3d sg(col[layout.theta_block(0) + i], col[layout.theta_block(1) + i],
                               col[layout.theta_block(2) + i]);
      const Eigen::Vector2d pt(col[layout.theta_block(3) + i], col[layout.theta_block(4) + i]);
      s += sg.dot(m.compliance * sg) + pt.dot(m.Q * pt);
    }
    total += 0.5 * s;
  }
  return total;
}

double damping_form(const Mesh& mesh, const MaterialField& materials, const DofLayout& layout,
                    const Eigen::MatrixXd& X) {
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& m = materials.matrices(mesh.region(e));
    for (int c = 2; c < 6; ++c)
      total += m.damping(c / 2) * X.col(e).segment(layout.velocity(c), layout.nv).squaredNorm();
  }
  return total;
}

double stabilization_form(const Mesh& mesh, const DofLayout& layout, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& Y, int quad_order) {
  const int order = quad_order > 0 ? quad_order : default_quad_order(layout.k);
  const ReferenceTables& T = ReferenceTables::get(layout.k, order);
  const int fs = layout.face_size();
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geo(mesh, e);
    const double inv_sdet = 1.0 / std::sqrt(geo.det);
    for (int lf = 0; lf < 3; ++lf) {
      const int fid = mesh.element_faces(e)[lf];
      const double hf = mesh.face_diameter(fid);
      const double tau = (layout.k + 1.0) * (layout.k + 1.0) / hf;
      const Eigen::MatrixXd& Fb = T.face_basis[same_orientation(mesh, e, lf) ? 0 : 1];
      const double inv_sl = 1.0 / std::sqrt(hf);
      for (int q = 0; q < T.face.size(); ++q) {
        double jump2 = 0.0;
        for (int c = 0; c < 6; ++c) {
          const double u =
              inv_sdet * T.face_values[lf].row(q).dot(X.col(e).segment(layout.velocity(c), layout.nv));
          const double uh = inv_sl * Fb.row(q).dot(Y.segment(fid * fs + c * layout.nf, layout.nf));
          jump2 += (u - uh) * (u - uh);
        }
        total += tau * hf * T.face.weights[q] * jump2;
      }
    }
  }
  return total;
}

}  // namespace tphdg
