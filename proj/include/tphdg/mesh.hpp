// Conforming triangular meshes of rectangular domains.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tphdg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }

struct Rectangle {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
};

enum class SplitPattern { diagonal, crisscross };

SplitPattern parse_split_pattern(const std::string& name);
std::string to_string(SplitPattern pattern);

/// An edge of the triangulation. Vertices are stored with v[0] < v[1]; the
/// face parameter s in [0,1] runs from v[0] to v[1]. elem[1] is -1 on the
/// boundary.
struct Face {
  std::array<int, 2> v{};
  std::array<int, 2> elem{-1, -1};
  std::array<int, 2> local{-1, -1};

  bool boundary() const { return elem[1] < 0; }
};

/// Immutable triangulation. Triangles are counterclockwise; local face i of a
/// triangle joins its vertices i and (i+1)%3.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<int> region);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(triangles_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_boundary_faces() const;

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int i) const { return vertices_[i]; }
  const std::array<int, 3>& triangle(int e) const { return triangles_[e]; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const Face& face(int f) const { return faces_[f]; }
  const std::vector<Face>& faces() const { return faces_; }
  /// Global face ids of the three local faces of element e.
  const std::array<int, 3>& element_faces(int e) const { return element_faces_[e]; }
  int region(int e) const { return region_[e]; }
  const std::vector<int>& regions() const { return region_; }

  double area(int e) const;
  Point centroid(int e) const;
  double element_diameter(int e) const { return element_diameter_[e]; }
  double face_diameter(int f) const { return face_diameter_[f]; }
  /// Outward unit normal of element e on its local face.
  Point outward_normal(int e, int local_face) const;
  /// Maximum element diameter.
  double h() const { return h_; }
  /// Smallest gamma with h_K <= gamma * h_F for all faces F of all K.
  double quasi_uniformity() const;
  double total_area() const;

  /// Reassigns region tags by evaluating `tag` at each element centroid.
  void assign_regions(const std::function<int(const Point&)>& tag);

 private:
  void build_topology();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> region_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 3>> element_faces_;
  std::vector<double> element_diameter_;
  std::vector<double> face_diameter_;
  double h_ = 0.0;
};

/// nx*ny cells, each split into 2 (diagonal) or 4 (crisscross) triangles.
/// Interior vertices may be displaced by a seeded jitter of relative size
/// `jitter` (at most 0.15) of the cell size.
Mesh build_structured_mesh(int nx, int ny, const Rectangle& domain,
                           SplitPattern pattern = SplitPattern::diagonal,
                           double jitter = 0.0, std::uint64_t seed = 0);

/// Red refinement: every triangle split into four similar children.
Mesh refine_uniform(const Mesh& mesh);

struct PointLocation {
  int element = -1;
  std::array<double, 3> barycentric{};
};

/// Containing element of `p` (lowest element id among ties).
PointLocation locate_point(const Mesh& mesh, const Point& p);

/// Plain-text export: header line, vertex count and vertices, triangle count
/// and triangles (vertex ids plus region tag).
void write_mesh_text(const Mesh& mesh, std::ostream& os);

}  // namespace tphdg
