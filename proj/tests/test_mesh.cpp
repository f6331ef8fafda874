#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tphdg/error.hpp"
#include "tphdg/mesh.hpp"

using namespace tphdg;

namespace {

const Rectangle kUnit{0.0, 0.0, 1.0, 1.0};

int interior_faces(const Mesh& m) {
  int n = 0;
  for (const auto& f : m.faces()) n += f.boundary() ? 0 : 1;
  return n;
}

}  // namespace

TEST(Mesh, SmallestDiagonalMesh) {
  const Mesh m = build_structured_mesh(1, 1, kUnit);
  EXPECT_EQ(m.num_elements(), 2);
  EXPECT_EQ(m.num_faces(), 5);
  EXPECT_EQ(interior_faces(m), 1);
  EXPECT_EQ(m.num_boundary_faces(), 4);
}

TEST(Mesh, TwoByTwoDiameter) {
  const Mesh m = build_structured_mesh(2, 2, kUnit);
  EXPECT_EQ(m.num_elements(), 8);
  EXPECT_NEAR(m.h(), std::sqrt(2.0) / 2.0, 1e-14);
}

TEST(Mesh, ScenarioResolution) {
  const Mesh m = build_structured_mesh(30, 30, {0.0, 0.0, 1500.0, 1500.0});
  EXPECT_NEAR(m.h(), 50.0 * std::sqrt(2.0), 1e-9);
  double shortest = 1e300;
  for (int f = 0; f < m.num_faces(); ++f) shortest = std::min(shortest, m.face_diameter(f));
  EXPECT_NEAR(shortest, 50.0, 1e-9);
}

TEST(Mesh, CrisscrossCount) {
  const Mesh m = build_structured_mesh(3, 2, kUnit, SplitPattern::crisscross);
  EXPECT_EQ(m.num_elements(), 24);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
}

TEST(Mesh, DegenerateRectangleRejected) {
  EXPECT_THROW(build_structured_mesh(2, 2, {0.0, 0.0, 0.0, 1.0}), Error);
  EXPECT_THROW(build_structured_mesh(0, 2, kUnit), Error);
}

TEST(Mesh, AreasPositiveAndSumToDomain) {
  for (auto split : {SplitPattern::diagonal, SplitPattern::crisscross}) {
    Mesh m = build_structured_mesh(4, 3, {0.0, 0.0, 2.0, 1.5}, split, 0.1, 5);
    for (int level = 0; level < 3; ++level) {
      double total = 0.0;
      for (int e = 0; e < m.num_elements(); ++e) {
        EXPECT_GT(m.area(e), 0.0);
        total += m.area(e);
      }
      EXPECT_NEAR(total, 3.0, 3e-12);
      m = refine_uniform(m);
    }
  }
}

TEST(Mesh, FaceIncidenceAndOppositeNormals) {
  const Mesh m = build_structured_mesh(3, 3, kUnit, SplitPattern::crisscross, 0.12, 3);
  for (const auto& f : m.faces()) {
    ASSERT_GE(f.elem[0], 0);
    if (f.boundary()) continue;
    const Point n0 = m.outward_normal(f.elem[0], f.local[0]);
    const Point n1 = m.outward_normal(f.elem[1], f.local[1]);
    EXPECT_NEAR(n0.x + n1.x, 0.0, 1e-14);
    EXPECT_NEAR(n0.y + n1.y, 0.0, 1e-14);
    EXPECT_NEAR(std::hypot(n0.x, n0.y), 1.0, 1e-14);
  }
  // Every element sees each of its faces exactly once.
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& ef = m.element_faces(e);
    EXPECT_EQ(std::set<int>(ef.begin(), ef.end()).size(), 3u);
  }
}

TEST(Mesh, QuasiUniformityLevelIndependent) {
  Mesh m = build_structured_mesh(2, 2, kUnit);
  const double g0 = m.quasi_uniformity();
  for (int level = 0; level < 3; ++level) {
    m = refine_uniform(m);
    EXPECT_NEAR(m.quasi_uniformity(), g0, 1e-12);
  }
  for (int e = 0; e < m.num_elements(); ++e)
    for (int f : m.element_faces(e)) {
      EXPECT_LE(m.face_diameter(f), m.element_diameter(e) * (1 + 1e-14));
      EXPECT_LE(m.element_diameter(e), g0 * m.face_diameter(f) * (1 + 1e-14));
    }
}

TEST(Mesh, RefinementCountsAndDiameters) {
  const Mesh m = build_structured_mesh(1, 1, kUnit, SplitPattern::diagonal, 0.0);
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.num_elements(), 8);
  for (int e = 0; e < r.num_elements(); ++e)
    EXPECT_NEAR(r.element_diameter(e), m.element_diameter(e / 4) / 2.0, 1e-14);
}

TEST(Mesh, RefineTwiceMatchesDirectConstruction) {
  const Mesh a = refine_uniform(refine_uniform(build_structured_mesh(4, 4, kUnit)));
  const Mesh b = build_structured_mesh(16, 16, kUnit);
  auto key = [](const Point& p) {
    return std::make_pair(std::llround(p.x * 1e9), std::llround(p.y * 1e9));
  };
  std::set<std::pair<long long, long long>> sa, sb;
  for (const auto& p : a.vertices()) sa.insert(key(p));
  for (const auto& p : b.vertices()) sb.insert(key(p));
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(a.num_elements(), b.num_elements());
}

TEST(Mesh, RefinementInheritsRegions) {
  Mesh m = build_structured_mesh(2, 2, kUnit);
  m.assign_regions([](const Point& c) { return c.x >= 0.5 ? 1 : 0; });
  const Mesh r = refine_uniform(m);
  for (int e = 0; e < r.num_elements(); ++e) EXPECT_EQ(r.region(e), m.region(e / 4));
}

TEST(Mesh, LocateCentroid) {
  const Mesh m = build_structured_mesh(3, 3, kUnit, SplitPattern::crisscross);
  const PointLocation loc = locate_point(m, m.centroid(0));
  EXPECT_EQ(loc.element, 0);
  for (double b : loc.barycentric) EXPECT_NEAR(b, 1.0 / 3.0, 1e-14);
}

TEST(Mesh, LocateReceiverAndTieBreak) {
  const Mesh m = build_structured_mesh(20, 20, {0.0, 0.0, 1500.0, 1500.0}, SplitPattern::crisscross);
  const PointLocation loc = locate_point(m, {750.0, 1125.0});
  ASSERT_GE(loc.element, 0);
  for (double b : loc.barycentric) EXPECT_GE(b, -1e-12);

  // A shared vertex resolves to the lowest incident element.
  const int v = m.triangle(7)[0];
  int lowest = m.num_elements();
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.triangle(e);
    if (std::find(t.begin(), t.end(), v) != t.end()) lowest = std::min(lowest, e);
  }
  EXPECT_EQ(locate_point(m, m.vertex(v)).element, lowest);
}

TEST(Mesh, LocateOutsideThrows) {
  const Mesh m = build_structured_mesh(2, 2, kUnit);
  try {
    locate_point(m, {1.5, 0.2});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("1.5"), std::string::npos);
  }
}

TEST(Mesh, JitterIsDeterministic) {
  const Mesh a = build_structured_mesh(4, 4, kUnit, SplitPattern::diagonal, 0.15, 42);
  const Mesh b = build_structured_mesh(4, 4, kUnit, SplitPattern::diagonal, 0.15, 42);
  const Mesh c = build_structured_mesh(4, 4, kUnit, SplitPattern::diagonal, 0.15, 43);
  bool differs = false;
  for (int i = 0; i < a.num_vertices(); ++i) {
    EXPECT_EQ(a.vertex(i).x, b.vertex(i).x);
    EXPECT_EQ(a.vertex(i).y, b.vertex(i).y);
    differs = differs || a.vertex(i).x != c.vertex(i).x;
  }
  EXPECT_TRUE(differs);
}

TEST(Mesh, TextExport) {
  const Mesh m = build_structured_mesh(1, 1, kUnit);
  std::ostringstream os;
  write_mesh_text(m, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_FALSE(header.empty());
  std::string tag;
  int nv = 0;
  is >> tag >> nv;
  EXPECT_EQ(tag, "vertices");
  EXPECT_EQ(nv, 4);
  double x, y;
  for (int i = 0; i < nv; ++i) is >> x >> y;
  int ne = 0;
  is >> tag >> ne;
  EXPECT_EQ(tag, "triangles");
  EXPECT_EQ(ne, 2);
}
