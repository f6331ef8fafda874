#include "tphdg/fespace.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "tphdg/error.hpp"

namespace tphdg {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  std::vector<double> p(n + 1), dp(n + 1);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      legendre(n, z, p.data(), dp.data());
      const double dz = p[n] / dp[n];
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    legendre(n, z, p.data(), dp.data());
    const double weight = 2.0 / ((1.0 - z * z) * dp[n] * dp[n]);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = weight;
    w[n - 1 - i] = weight;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace

void legendre(int n, double x, double* values, double* derivatives) {
  values[0] = 1.0;
  if (derivatives) derivatives[0] = 0.0;
  if (n == 0) return;
  values[1] = x;
  if (derivatives) derivatives[1] = 1.0;
  for (int j = 1; j < n; ++j) {
    values[j + 1] = ((2.0 * j + 1.0) * x * values[j] - j * values[j - 1]) / (j + 1.0);
    if (derivatives) derivatives[j + 1] = derivatives[j - 1] + (2.0 * j + 1.0) * values[j];
  }
}

QuadratureRule quadrature_simplex(int order) {
  if (order < 0 || order > kMaxQuadratureOrder) {
    std::ostringstream msg;
    msg << "quadrature_simplex: unsupported order " << order << " (maximum "
        << kMaxQuadratureOrder << ")";
    throw Error(msg.str());
  }
  const int m = (order + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  QuadratureRule rule;
  rule.order = order;
  for (int i = 0; i < m; ++i) {
    const double u = 0.5 * (x[i] + 1.0);
    for (int j = 0; j < m; ++j) {
      const double v = 0.5 * (x[j] + 1.0);
      rule.points.push_back({u * (1.0 - v), v});
      rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - v));
    }
  }
  return rule;
}

QuadratureRule1D quadrature_segment(int order) {
  if (order < 0 || order > kMaxQuadratureOrder) {
    std::ostringstream msg;
    msg << "quadrature_segment: unsupported order " << order << " (maximum "
        << kMaxQuadratureOrder << ")";
    throw Error(msg.str());
  }
  const int m = order / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  QuadratureRule1D rule;
  rule.order = order;
  for (int i = 0; i < m; ++i) {
    rule.points.push_back(0.5 * (x[i] + 1.0));
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

ScalarBasis::ScalarBasis(int degree) : degree_(degree), dim_(dim_p2(degree)) {
  TPHDG_REQUIRE(degree >= 0, "ScalarBasis: negative degree");
  for (int n = 0; n <= degree; ++n)
    for (int a = n; a >= 0; --a) exponents_.push_back({a, n - a});

  const QuadratureRule rule = quadrature_simplex(2 * degree);
  Eigen::MatrixXd raw_values(rule.size(), dim_);
  std::vector<double> v(dim_);
  for (int q = 0; q < rule.size(); ++q) {
    raw(rule.points[q][0], rule.points[q][1], v.data(), nullptr, nullptr);
    for (int i = 0; i < dim_; ++i) raw_values(q, i) = v[i];
  }
  const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), rule.size());
  coeffs_ = Eigen::MatrixXd::Identity(dim_, dim_);
  // Cholesky orthonormalization, repeated once to remove the conditioning error
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::MatrixXd values = raw_values * coeffs_.transpose();
    const Eigen::MatrixXd gram = values.transpose() * weights.asDiagonal() * values;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    TPHDG_REQUIRE(llt.info() == Eigen::Success, "ScalarBasis: Gram matrix not positive definite");
    const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(dim_, dim_));
    coeffs_ = (linv * coeffs_).eval();
  }
}

const ScalarBasis& ScalarBasis::get(int degree) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ScalarBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_unique<ScalarBasis>(degree);
  return *slot;
}

void ScalarBasis::raw(double xi, double eta, double* values, double* dxi, double* deta) const {
  double px[32], dpx[32], py[32], dpy[32];
  TPHDG_REQUIRE(degree_ < 32, "ScalarBasis: degree too large");
  legendre(degree_, 2.0 * xi - 1.0, px, dpx);
  legendre(degree_, 2.0 * eta - 1.0, py, dpy);
  for (int i = 0; i < dim_; ++i) {
    const auto [a, b] = exponents_[i];
    values[i] = px[a] * py[b];
    if (dxi) dxi[i] = 2.0 * dpx[a] * py[b];
    if (deta) deta[i] = 2.0 * px[a] * dpy[b];
  }
}

void ScalarBasis::eval(double xi, double eta, double* values) const {
  double r[600];
  TPHDG_REQUIRE(dim_ <= 600, "ScalarBasis: dimension too large");
  raw(xi, eta, r, nullptr, nullptr);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += coeffs_(i, j) * r[j];
    values[i] = s;
  }
}

void ScalarBasis::eval_grad(double xi, double eta, double* values, double* dxi,
                            double* deta) const {
  double r[600], rx[600], ry[600];
  TPHDG_REQUIRE(dim_ <= 600, "ScalarBasis: dimension too large");
  raw(xi, eta, r, rx, ry);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0, sx = 0.0, sy = 0.0;
    for (int j = 0; j <= i; ++j) {
      s += coeffs_(i, j) * r[j];
      sx += coeffs_(i, j) * rx[j];
      sy += coeffs_(i, j) * ry[j];
    }
    if (values) values[i] = s;
    dxi[i] = sx;
    deta[i] = sy;
  }
}

void face_basis_eval(int degree, double s, double* values) {
  legendre(degree, 2.0 * s - 1.0, values);
  for (int j = 0; j <= degree; ++j) values[j] *= std::sqrt(2.0 * j + 1.0);
}

ElementGeometry::ElementGeometry(const Mesh& mesh, int e) {
  const auto& t = mesh.triangle(e);
  const Point a = mesh.vertex(t[0]);
  const Point b = mesh.vertex(t[1]);
  const Point c = mesh.vertex(t[2]);
  origin = a;
  jacobian << b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y;
  det = jacobian.determinant();
  if (!(det > 0.0)) {
    std::ostringstream msg;
    msg << "ElementGeometry: singular or inverted element " << e;
    throw Error(msg.str());
  }
  inverse_jacobian = jacobian.inverse();
}

Point ElementGeometry::map(double xi, double eta) const {
  return {origin.x + jacobian(0, 0) * xi + jacobian(0, 1) * eta,
          origin.y + jacobian(1, 0) * xi + jacobian(1, 1) * eta};
}

std::array<double, 2> ElementGeometry::to_reference(const Point& p) const {
  const double dx = p.x - origin.x;
  const double dy = p.y - origin.y;
  return {inverse_jacobian(0, 0) * dx + inverse_jacobian(0, 1) * dy,
          inverse_jacobian(1, 0) * dx + inverse_jacobian(1, 1) * dy};
}

void element_basis_eval(const ScalarBasis& basis, const ElementGeometry& geo, const Point& p,
                        double* values) {
  const auto ref = geo.to_reference(p);
  basis.eval(ref[0], ref[1], values);
  const double scale = 1.0 / std::sqrt(geo.det);
  for (int i = 0; i < basis.size(); ++i) values[i] *= scale;
}

Tabulation::Tabulation(const ScalarBasis& basis, const QuadratureRule& rule)
    : values(rule.size(), basis.size()), dxi(rule.size(), basis.size()),
      deta(rule.size(), basis.size()) {
  std::vector<double> v(basis.size()), gx(basis.size()), gy(basis.size());
  for (int q = 0; q < rule.size(); ++q) {
    basis.eval_grad(rule.points[q][0], rule.points[q][1], v.data(), gx.data(), gy.data());
    for (int i = 0; i < basis.size(); ++i) {
      values(q, i) = v[i];
      dxi(q, i) = gx[i];
      deta(q, i) = gy[i];
    }
  }
}

Eigen::MatrixXd project_element(const Mesh& mesh, int e, int degree, int ncomp,
                                const FieldFunction& f, int quad_order) {
  if (quad_order < 0) quad_order = 2 * degree + 6;
  const ScalarBasis& basis = ScalarBasis::get(degree);
  const QuadratureRule rule = quadrature_simplex(quad_order);
  const ElementGeometry geo(mesh, e);
  const double scale = std::sqrt(geo.det);  // w * det / sqrt(det)
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(basis.size(), ncomp);
  std::vector<double> phi(basis.size()), val(ncomp);
  for (int q = 0; q < rule.size(); ++q) {
    basis.eval(rule.points[q][0], rule.points[q][1], phi.data());
    f(geo.map(rule.points[q][0], rule.points[q][1]), val.data());
    const double w = rule.weights[q] * scale;
    for (int c = 0; c < ncomp; ++c)
      for (int i = 0; i < basis.size(); ++i) coeffs(i, c) += w * val[c] * phi[i];
  }
  return coeffs;
}

Eigen::MatrixXd project_face(const Mesh& mesh, int face, int degree, int ncomp,
                             const FieldFunction& f, int quad_order) {
  if (quad_order < 0) quad_order = 2 * degree + 6;
  const QuadratureRule1D rule = quadrature_segment(quad_order);
  const Face& fc = mesh.face(face);
  const Point a = mesh.vertex(fc.v[0]);
  const Point b = mesh.vertex(fc.v[1]);
  const double len = mesh.face_diameter(face);
  const double scale = std::sqrt(len);  // w * len / sqrt(len)
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(degree + 1, ncomp);
  std::vector<double> chi(degree + 1), val(ncomp);
  for (int q = 0; q < rule.size(); ++q) {
    const double s = rule.points[q];
    face_basis_eval(degree, s, chi.data());
    f(a + s * (b - a), val.data());
    const double w = rule.weights[q] * scale;
    for (int c = 0; c < ncomp; ++c)
      for (int j = 0; j <= degree; ++j) coeffs(j, c) += w * val[c] * chi[j];
  }
  return coeffs;
}

Eigen::VectorXd evaluate_element(const Mesh& mesh, int e, int degree,
                                 const Eigen::Ref<const Eigen::MatrixXd>& coeffs, const Point& p) {
  const ScalarBasis& basis = ScalarBasis::get(degree);
  const ElementGeometry geo(mesh, e);
  Eigen::VectorXd phi(basis.size());
  element_basis_eval(basis, geo, p, phi.data());
  return coeffs.topRows(basis.size()).transpose() * phi;
}

ProjectionError projection_error(const Mesh& mesh, int degree, const FieldFunction& f) {
  const int qo = 2 * degree + 10;
  const ScalarBasis& basis = ScalarBasis::get(degree);
  const QuadratureRule rule = quadrature_simplex(qo);
  const QuadratureRule1D frule = quadrature_segment(qo);
  double vol = 0.0, bnd = 0.0;
  std::vector<double> phi(basis.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Eigen::MatrixXd c = project_element(mesh, e, degree, 1, f, qo);
    const ElementGeometry geo(mesh, e);
    for (int q = 0; q < rule.size(); ++q) {
      const Point x = geo.map(rule.points[q][0], rule.points[q][1]);
      element_basis_eval(basis, geo, x, phi.data());
      double fx;
      f(x, &fx);
      double pf = 0.0;
      for (int i = 0; i < basis.size(); ++i) pf += c(i, 0) * phi[i];
      vol += rule.weights[q] * geo.det * (fx - pf) * (fx - pf);
    }
    const auto& t = mesh.triangle(e);
    for (int lf = 0; lf < 3; ++lf) {
      const int fid = mesh.element_faces(e)[lf];
      const Point a = mesh.vertex(t[lf]);
      const Point b = mesh.vertex(t[(lf + 1) % 3]);
      const double hf = mesh.face_diameter(fid);
      const double weight = hf / ((degree + 1.0) * (degree + 1.0));
      for (int q = 0; q < frule.size(); ++q) {
        const Point x = a + frule.points[q] * (b - a);
        element_basis_eval(basis, geo, x, phi.data());
        double fx;
        f(x, &fx);
        double pf = 0.0;
        for (int i = 0; i < basis.size(); ++i) pf += c(i, 0) * phi[i];
        bnd += weight * frule.weights[q] * hf * (fx - pf) * (fx - pf);
      }
    }
  }
  return {std::sqrt(vol), std::sqrt(bnd)};
}

std::vector<ProjectionRateRow> projection_rate_report(const FieldFunction& f,
                                                      const std::vector<Mesh>& meshes, int degree) {
  if (meshes.size() < 2) throw Error("projection_rate_report: at least two meshes are required");
  std::vector<ProjectionRateRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t l = 0; l < meshes.size(); ++l) {
    const ProjectionError err = projection_error(meshes[l], degree, f);
    ProjectionRateRow row{static_cast<int>(l), meshes[l].h(), err.volume, err.boundary, nan, nan};
    if (l > 0) {
      const auto& prev = rows.back();
      const double lh = std::log(prev.h / row.h);
      const double floor = 1e-13;
      if (prev.volume_error > floor && row.volume_error > floor)
        row.volume_rate = std::log(prev.volume_error / row.volume_error) / lh;
      if (prev.boundary_error > floor && row.boundary_error > floor)
        row.boundary_rate = std::log(prev.boundary_error / row.boundary_error) / lh;
    }
    rows.push_back(row);
  }
  return rows;
}

double trace_inequality_ratio(const Mesh& mesh, int degree, int trials, std::uint64_t seed) {
  TPHDG_REQUIRE(trials >= 1, "trace_inequality_ratio: trials must be >= 1");
  const ScalarBasis& basis = ScalarBasis::get(degree);
  const QuadratureRule1D frule = quadrature_segment(2 * degree + 2);
  const int n = basis.size();
  // Per-element boundary Gram matrices; the volume Gram matrix is the identity.
  std::vector<Eigen::MatrixXd> bgram(mesh.num_elements(), Eigen::MatrixXd::Zero(n, n));
  std::vector<double> phi(n);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geo(mesh, e);
    const auto& t = mesh.triangle(e);
    for (int lf = 0; lf < 3; ++lf) {
      const int fid = mesh.element_faces(e)[lf];
      const double hf = mesh.face_diameter(fid);
      const double weight = hf / ((degree + 1.0) * (degree + 1.0));
      const Point a = mesh.vertex(t[lf]);
      const Point b = mesh.vertex(t[(lf + 1) % 3]);
      for (int q = 0; q < frule.size(); ++q) {
        element_basis_eval(basis, geo, a + frule.points[q] * (b - a), phi.data());
        const Eigen::Map<const Eigen::VectorXd> v(phi.data(), n);
        bgram[e].noalias() += (weight * frule.weights[q] * hf) * v * v.transpose();
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  Eigen::VectorXd c(n);
  for (int trial = 0; trial < trials; ++trial) {
    double num = 0.0, den = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      for (int i = 0; i < n; ++i) c[i] = normal(rng);
      num += c.dot(bgram[e] * c);
      den += c.squaredNorm();
    }
    best = std::max(best, std::sqrt(num / den));
  }
  return best;
}

}  // namespace tphdg
