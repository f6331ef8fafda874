#include "tphdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "tphdg/error.hpp"

namespace tphdg {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

SplitPattern parse_split_pattern(const std::string& name) {
  if (name == "diagonal") return SplitPattern::diagonal;
  if (name == "crisscross") return SplitPattern::crisscross;
  throw ConfigError("unknown split pattern '" + name + "' (expected diagonal or crisscross)");
}

std::string to_string(SplitPattern pattern) {
  return pattern == SplitPattern::diagonal ? "diagonal" : "crisscross";
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<int> region)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), region_(std::move(region)) {
  if (region_.empty()) region_.assign(triangles_.size(), 0);
  TPHDG_REQUIRE(region_.size() == triangles_.size(), "Mesh: region tag count mismatch");
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    const double a = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (!(a > 0.0)) {
      std::ostringstream msg;
      msg << "Mesh: triangle " << e << " has non-positive area " << a;
      throw Error(msg.str());
    }
  }
  build_topology();
}

void Mesh::build_topology() {
  std::map<std::pair<int, int>, int> lookup;
  faces_.clear();
  element_faces_.assign(triangles_.size(), {-1, -1, -1});
  for (int e = 0; e < num_elements(); ++e) {
    for (int i = 0; i < 3; ++i) {
      int a = triangles_[e][i];
      int b = triangles_[e][(i + 1) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = lookup.try_emplace({a, b}, static_cast<int>(faces_.size()));
      if (inserted) {
        Face f;
        f.v = {a, b};
        f.elem = {e, -1};
        f.local = {i, -1};
        faces_.push_back(f);
      } else {
        Face& f = faces_[it->second];
        if (f.elem[1] >= 0) throw Error("Mesh: face shared by more than two elements");
        f.elem[1] = e;
        f.local[1] = i;
      }
      element_faces_[e][i] = it->second;
    }
  }

  face_diameter_.resize(faces_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f)
    face_diameter_[f] = distance(vertices_[faces_[f].v[0]], vertices_[faces_[f].v[1]]);

  element_diameter_.resize(triangles_.size());
  h_ = 0.0;
  for (int e = 0; e < num_elements(); ++e) {
    double d = 0.0;
    for (int f : element_faces_[e]) d = std::max(d, face_diameter_[f]);
    element_diameter_[e] = d;
    h_ = std::max(h_, d);
  }
}

int Mesh::num_boundary_faces() const {
  return static_cast<int>(std::count_if(faces_.begin(), faces_.end(),
                                        [](const Face& f) { return f.boundary(); }));
}

double Mesh::area(int e) const {
  const auto& t = triangles_[e];
  return signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
}

Point Mesh::centroid(int e) const {
  const auto& t = triangles_[e];
  const Point& a = vertices_[t[0]];
  const Point& b = vertices_[t[1]];
  const Point& c = vertices_[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

Point Mesh::outward_normal(int e, int local_face) const {
  const auto& t = triangles_[e];
  const Point& a = vertices_[t[local_face]];
  const Point& b = vertices_[t[(local_face + 1) % 3]];
  const double len = distance(a, b);
  // counterclockwise orientation: the outward normal is the edge rotated clockwise
  return {(b.y - a.y) / len, -(b.x - a.x) / len};
}

double Mesh::quasi_uniformity() const {
  double gamma = 1.0;
  for (int e = 0; e < num_elements(); ++e)
    for (int f : element_faces_[e])
      gamma = std::max(gamma, element_diameter_[e] / face_diameter_[f]);
  return gamma;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int e = 0; e < num_elements(); ++e) s += area(e);
  return s;
}

void Mesh::assign_regions(const std::function<int(const Point&)>& tag) {
  for (int e = 0; e < num_elements(); ++e) region_[e] = tag(centroid(e));
}

Mesh build_structured_mesh(int nx, int ny, const Rectangle& domain, SplitPattern pattern,
                           double jitter, std::uint64_t seed) {
  if (nx < 1 || ny < 1) {
    std::ostringstream msg;
    msg << "build_structured_mesh: nx and ny must be >= 1 (got " << nx << ", " << ny << ")";
    throw Error(msg.str());
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    std::ostringstream msg;
    msg << "build_structured_mesh: degenerate rectangle [" << domain.xmin << ", " << domain.xmax
        << "] x [" << domain.ymin << ", " << domain.ymax << "]";
    throw Error(msg.str());
  }
  if (jitter < 0.0 || jitter > 0.15) throw Error("build_structured_mesh: jitter must lie in [0, 0.15]");

  const double dx = domain.width() / nx;
  const double dy = domain.height() / ny;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1) + nx * ny));
  auto grid_id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? domain.xmax : domain.xmin + i * dx;
      const double y = (j == ny) ? domain.ymax : domain.ymin + j * dy;
      vertices.push_back({x, y});
    }
  }

  std::vector<std::array<int, 3>> triangles;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = grid_id(i, j);
      const int v10 = grid_id(i + 1, j);
      const int v11 = grid_id(i + 1, j + 1);
      const int v01 = grid_id(i, j + 1);
      if (pattern == SplitPattern::diagonal) {
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      } else {
        const int c = static_cast<int>(vertices.size());
        vertices.push_back({domain.xmin + (i + 0.5) * dx, domain.ymin + (j + 0.5) * dy});
        triangles.push_back({v00, v10, c});
        triangles.push_back({v10, v11, c});
        triangles.push_back({v11, v01, c});
        triangles.push_back({v01, v00, c});
      }
    }
  }

  if (jitter > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double amp = jitter * std::min(dx, dy);
    auto interior = [&](const Point& p) {
      const double tol = 1e-12 * std::max(domain.width(), domain.height());
      return p.x > domain.xmin + tol && p.x < domain.xmax - tol && p.y > domain.ymin + tol &&
             p.y < domain.ymax - tol;
    };
    for (auto& p : vertices) {
      const double ox = unit(rng);
      const double oy = unit(rng);
      if (interior(p)) {
        p.x += amp * ox;
        p.y += amp * oy;
      }
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), {});
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Point> vertices = mesh.vertices();
  std::vector<int> midpoint(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const Point a = mesh.vertex(face.v[0]);
    const Point b = mesh.vertex(face.v[1]);
    midpoint[f] = static_cast<int>(vertices.size());
    vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> region;
  triangles.reserve(4 * mesh.num_elements());
  region.reserve(4 * mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangle(e);
    const auto& ef = mesh.element_faces(e);
    const int m01 = midpoint[ef[0]];
    const int m12 = midpoint[ef[1]];
    const int m20 = midpoint[ef[2]];
    triangles.push_back({t[0], m01, m20});
    triangles.push_back({m01, t[1], m12});
    triangles.push_back({m20, m12, t[2]});
    triangles.push_back({m12, m20, m01});
    region.insert(region.end(), 4, mesh.region(e));
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(region));
}

PointLocation locate_point(const Mesh& mesh, const Point& p) {
  const double tol = 1e-12;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangle(e);
    const Point& a = mesh.vertex(t[0]);
    const Point& b = mesh.vertex(t[1]);
    const Point& c = mesh.vertex(t[2]);
    const double area = signed_area(a, b, c);
    const std::array<double, 3> bary = {signed_area(p, b, c) / area, signed_area(a, p, c) / area,
                                        signed_area(a, b, p) / area};
    if (bary[0] >= -tol && bary[1] >= -tol && bary[2] >= -tol) return {e, bary};
  }
  std::ostringstream msg;
  msg.precision(17);
  msg << "locate_point: point (" << p.x << ", " << p.y << ") lies outside the mesh";
  throw Error(msg.str());
}

void write_mesh_text(const Mesh& mesh, std::ostream& os) {
  os.precision(17);
  os << "# tphdg mesh v1: vertices (x y) then triangles (v0 v1 v2 region)\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& v : mesh.vertices()) os << v.x << " " << v.y << "\n";
  os << "triangles " << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangle(e);
    os << t[0] << " " << t[1] << " " << t[2] << " " << mesh.region(e) << "\n";
  }
}

}  // namespace tphdg
