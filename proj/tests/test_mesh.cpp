#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "harmlab/mesh.hpp"

using namespace harmlab;

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
double u01(std::uint64_t& s) {
  return static_cast<double>(mix(s) >> 11) * 0x1.0p-53;
}

// Law-of-cosines oracle for chart points with a given reduced angle gap.
double chordOracle(double r1, double r2, double gap) {
  return std::sqrt(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(gap));
}

}  // namespace

TEST_CASE("exact cone distance closed forms") {
  const ConePoint a{1.0, 0.0};
  // Same ray.
  CHECK(coneDistance(2.0 * kPi, a, ConePoint{0.5, 0.0}) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // Right angle on the flat disk.
  CHECK(coneDistance(2.0 * kPi, a, ConePoint{1.0, 0.5 * kPi}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // Reduced gap 1.5*pi on the 3*pi cone: geodesic through the apex.
  CHECK(coneDistance(3.0 * kPi, a, ConePoint{1.0, 1.5 * kPi}) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // Apex distance equals the radius.
  CHECK(coneDistance(3.0 * kPi, ConePoint{0.0, 0.0}, ConePoint{0.7, 2.0}) ==
        doctest::Approx(0.7).epsilon(1e-14));
  // Chord oracle below the apex-path threshold.
  CHECK(coneDistance(3.0 * kPi, a, ConePoint{0.8, 2.0}) ==
        doctest::Approx(chordOracle(1.0, 0.8, 2.0)).epsilon(1e-14));
}

TEST_CASE("cone distance metric axioms hold on random triples") {
  for (double theta : {kPi, 2.0 * kPi, 3.0 * kPi}) {
    std::uint64_t seed = 42;
    for (int trial = 0; trial < 200; ++trial) {
      const ConePoint p{u01(seed), theta * u01(seed)};
      const ConePoint q{u01(seed), theta * u01(seed)};
      const ConePoint r{u01(seed), theta * u01(seed)};
      const double pq = coneDistance(theta, p, q);
      const double qp = coneDistance(theta, q, p);
      CHECK(pq == qp);
      CHECK(coneDistance(theta, p, p) == 0.0);
      const double pr = coneDistance(theta, p, r);
      const double qr = coneDistance(theta, q, r);
      CHECK(pq <= pr + qr + 1e-12);
    }
  }
}

TEST_CASE("cone mesh is a triangulated disk with the right area") {
  SUBCASE("flat unit disk") {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 8});
    CHECK(mesh.eulerCharacteristic() == 1);
    CHECK(mesh.totalMeasure() == doctest::Approx(kPi).epsilon(0.01));
    CHECK(mesh.curvature.isBounded());
    // Boundary = outer ring, everything else interior with degree >= 3.
    for (int v = 0; v < mesh.vertexCount(); ++v) {
      const bool outer =
          std::abs(mesh.vertices[v].r - 1.0) < 1e-12;
      CHECK(static_cast<bool>(mesh.boundaryFlags[v]) == outer);
      if (!outer) {
        CHECK(mesh.adjacencyOffsets[v + 1] - mesh.adjacencyOffsets[v] >= 3);
      }
    }
    for (const auto& e : mesh.edges) CHECK(e.weight >= 0.0);
  }
  SUBCASE("wide cone, refinement level 2") {
    const DomainMesh mesh = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, 2, 8});
    CHECK(mesh.eulerCharacteristic() == 1);
    CHECK(mesh.totalMeasure() ==
          doctest::Approx(1.5 * kPi).epsilon(0.01));
    CHECK_FALSE(mesh.curvature.isBounded());
    CHECK_THROWS_AS(comparisonGeometry(mesh), Error);
    for (const auto& e : mesh.edges) CHECK(e.weight >= 0.0);
  }
  SUBCASE("narrow cone apex angle") {
    const DomainMesh mesh = buildConeMesh(ConeSpec{kPi, 1.0, 0, 8});
    // Sum of fan angles at the apex reproduces the cone angle.
    double angleSum = 0.0;
    for (const auto& t : mesh.triangles) {
      if (t.a != 0 && t.b != 0 && t.c != 0) continue;
      int apex = 0, u = t.b, v = t.c;
      if (t.b == 0) {
        apex = t.b, u = t.a, v = t.c;
      } else if (t.c == 0) {
        apex = t.c, u = t.a, v = t.b;
      }
      const double lu = coneDistance(kPi, mesh.vertices[apex], mesh.vertices[u]);
      const double lv = coneDistance(kPi, mesh.vertices[apex], mesh.vertices[v]);
      const double luv = coneDistance(kPi, mesh.vertices[u], mesh.vertices[v]);
      angleSum +=
          std::acos((lu * lu + lv * lv - luv * luv) / (2.0 * lu * lv));
    }
    CHECK(angleSum == doctest::Approx(kPi).epsilon(1e-10));
  }
}

TEST_CASE("mesh spacing halves with each refinement level") {
  const ConeSpec base{2.0 * kPi, 1.0, 0, 8};
  CHECK(base.spacing() == doctest::Approx(1.0 / 8.0));
  CHECK(base.refined().spacing() == doctest::Approx(1.0 / 16.0));
  CHECK(base.refined(2).spacing() == doctest::Approx(1.0 / 32.0));
}

TEST_CASE("metric balls") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});

  SUBCASE("radius beyond the diameter captures everything") {
    const MetricBall all = metricBall(mesh, 0, 10.0);
    CHECK(static_cast<int>(all.vertices.size()) == mesh.vertexCount());
    CHECK(all.measure == doctest::Approx(mesh.totalMeasure()));
  }
  SUBCASE("interior ball measure approximates the disk area") {
    const MetricBall ball = metricBall(mesh, ConePoint{0.5, 0.0}, 0.3);
    CHECK(ball.measure == doctest::Approx(kPi * 0.09).epsilon(0.05));
    // Members sorted by index, distances consistent, strictly inside.
    for (size_t i = 1; i < ball.vertices.size(); ++i) {
      CHECK(ball.vertices[i] > ball.vertices[i - 1]);
    }
    for (size_t i = 0; i < ball.vertices.size(); ++i) {
      CHECK(ball.distances[i] ==
            geodesicDistance(mesh, ConePoint{0.5, 0.0},
                             mesh.vertices[ball.vertices[i]]));
      CHECK(ball.distances[i] < 0.3);
    }
  }
  SUBCASE("windowed scan agrees with a brute-force scan") {
    std::uint64_t seed = 7;
    for (int trial = 0; trial < 20; ++trial) {
      const ConePoint c{u01(seed), 2.0 * kPi * u01(seed)};
      const double radius = 0.05 + 0.4 * u01(seed);
      const MetricBall ball = metricBall(mesh, c, radius);
      std::vector<int> brute;
      for (int v = 0; v < mesh.vertexCount(); ++v) {
        if (coneDistance(2.0 * kPi, c, mesh.vertices[v]) < radius) {
          brute.push_back(v);
        }
      }
      CHECK(ball.vertices == brute);
    }
  }
  SUBCASE("apex ball on a wide cone has cone-sector measure") {
    const DomainMesh wide = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, 2, 8});
    const MetricBall ball = metricBall(wide, 0, 0.3);
    CHECK(ball.measure ==
          doctest::Approx(1.5 * kPi * 0.09).epsilon(0.05));
  }
}

TEST_CASE("doubling constant is stable under refinement") {
  double previous = 0.0;
  for (int level : {2, 3}) {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, level, 8});
    const ConePoint c{0.45, 1.0};
    const double ratio = metricBall(mesh, c, 0.3).measure /
                         metricBall(mesh, c, 0.15).measure;
    if (previous != 0.0) {
      CHECK(std::abs(ratio - previous) / previous < 0.10);
    }
    previous = ratio;
  }
}

TEST_CASE("graph distance dominates the exact cone distance") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 8});
  std::uint64_t seed = 99;
  for (int trial = 0; trial < 30; ++trial) {
    const int i = static_cast<int>(mix(seed) % mesh.vertexCount());
    const int j = static_cast<int>(mix(seed) % mesh.vertexCount());
    const double graph = graphDistance(mesh, i, j);
    const double exact = geodesicDistance(mesh, i, j);
    CHECK(graph >= exact - 1e-12);
  }
}

TEST_CASE("nearest vertex lookup matches a brute-force scan") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, 1, 8});
  std::uint64_t seed = 2024;
  for (int trial = 0; trial < 40; ++trial) {
    const double r = static_cast<double>(mix(seed) % 10000) / 10000.0;
    const double phi =
        3.0 * kPi * static_cast<double>(mix(seed) % 10000) / 10000.0;
    const ConePoint p{r, phi};
    const int fast = nearestVertex(mesh, p);
    double bestDist = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int v = 0; v < mesh.vertexCount(); ++v) {
      const double d = coneDistance(3.0 * kPi, mesh.vertices[v], p);
      if (d < bestDist) {
        bestDist = d;
        best = v;
      }
    }
    const double fastDist = coneDistance(3.0 * kPi, mesh.vertices[fast], p);
    CHECK(fastDist <= bestDist + 1e-12);
    CHECK(best >= 0);
  }
}

TEST_CASE("shortest vertex paths connect their endpoints along edges") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{kPi, 1.0, 1, 8});
  std::uint64_t seed = 5;
  for (int trial = 0; trial < 10; ++trial) {
    const int i = static_cast<int>(mix(seed) % mesh.vertexCount());
    const int j = static_cast<int>(mix(seed) % mesh.vertexCount());
    const std::vector<int> path = shortestVertexPath(mesh, i, j);
    REQUIRE(!path.empty());
    CHECK(path.front() == i);
    CHECK(path.back() == j);
    double length = 0.0;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      bool adjacent = false;
      for (int a = mesh.adjacencyOffsets[path[t]];
           a < mesh.adjacencyOffsets[path[t] + 1]; ++a) {
        const DomainMesh::Neighbor nb = mesh.adjacency[a];
        if (nb.vertex == path[t + 1]) {
          adjacent = true;
          length += mesh.edges[nb.edge].length;
        }
      }
      CHECK(adjacent);
    }
    CHECK(length == doctest::Approx(graphDistance(mesh, i, j)).epsilon(1e-12));
  }
}

TEST_CASE("surface distance converges to the exact cone distance") {
  // Chart point pairs with separation comparable to the domain radius.  The
  // straightened surface path must approach the closed-form cone distance as
  // the mesh refines, while staying sandwiched between the exact distance and
  // the raw edge-path length.
  struct Probe {
    double totalAngle;
    ConePoint x;
    ConePoint y;
  };
  const std::vector<Probe> probes = {
      {2.0 * kPi, ConePoint{0.83, 0.37}, ConePoint{0.71, 3.50}},
      {2.0 * kPi, ConePoint{0.95, 5.90}, ConePoint{0.40, 1.10}},
      {3.0 * kPi, ConePoint{0.88, 0.20}, ConePoint{0.76, 8.90}},
      // Separation angle beyond pi on the wide cone: the geodesic passes
      // through the apex.
      {3.0 * kPi, ConePoint{0.80, 0.10}, ConePoint{0.80, 4.60}},
      {kPi / 2.0, ConePoint{0.90, 0.05}, ConePoint{0.85, 1.45}},
  };

  std::vector<double> worstGap(4, 0.0);
  for (int level = 0; level <= 3; ++level) {
    for (const Probe& probe : probes) {
      const DomainMesh mesh =
          buildConeMesh(ConeSpec{probe.totalAngle, 1.0, level, 8});
      const int i = nearestVertex(mesh, probe.x);
      const int j = nearestVertex(mesh, probe.y);
      const double exact = geodesicDistance(mesh, i, j);
      const double graph = graphDistance(mesh, i, j);
      const double surface = surfaceDistance(mesh, i, j);
      CHECK(surface >= exact - 1e-9);
      CHECK(surface <= graph + 1e-9);
      const double gap = (surface - exact) / exact;
      worstGap[level] = std::max(worstGap[level], gap);
    }
  }
  // The worst-case relative gap shrinks with refinement (small slack absorbs
  // floating-point noise once the gap reaches the straightening floor) and is
  // comfortably below 3% at the finest level.
  for (int level = 0; level + 1 < 4; ++level) {
    CHECK(worstGap[level + 1] <= worstGap[level] + 2e-4);
  }
  CHECK(worstGap[3] < 0.03);
  CHECK(worstGap[3] < worstGap[0]);
}

TEST_CASE("distance field to the boundary of the disk") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 8});
  std::vector<int> boundary;
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    if (mesh.boundaryFlags[v]) boundary.push_back(v);
  }
  const std::vector<double> dist = distanceField(mesh, boundary);
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    // On the disk the nearest boundary point of a mesh vertex is within one
    // angular step of the radial projection.
    CHECK(dist[v] >= 1.0 - mesh.vertices[v].r - 1e-12);
    CHECK(dist[v] <= 1.0 - mesh.vertices[v].r + 0.1);
  }
}

TEST_CASE("mesh construction rejects invalid parameters") {
  CHECK_THROWS_AS(buildConeMesh(ConeSpec{-1.0, 1.0, 0, 8}), Error);
  CHECK_THROWS_AS(buildConeMesh(ConeSpec{kPi, 0.0, 0, 8}), Error);
  CHECK_THROWS_AS(buildConeMesh(ConeSpec{kPi, 1.0, -1, 8}), Error);
  CHECK_THROWS_AS(buildConeMesh(ConeSpec{kPi, 1.0, 0, 1}), Error);

  const DomainMesh mesh = buildConeMesh(ConeSpec{kPi, 1.0, 0, 8});
  CHECK_THROWS_AS(geodesicDistance(mesh, ConePoint{2.0, 0.0}, ConePoint{0.0, 0.0}),
                  Error);
  CHECK_THROWS_AS(metricBall(mesh, -1, 0.5), Error);
  CHECK_THROWS_AS(metricBall(mesh, 0, -0.5), Error);
}
