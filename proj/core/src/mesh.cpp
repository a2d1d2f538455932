#include "harmlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <array>
#include <map>
#include <set>
#include <numbers>
#include <queue>
#include <utility>

namespace harmlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Wraps an angle into [0, period).
double reduceAngle(double phi, double period) {
  double a = std::fmod(phi, period);
  if (a < 0.0) a += period;
  if (a >= period) a = 0.0;  // fmod rounding at the seam
  return a;
}

// Numerically stable Heron area (Kahan's ordering).
double triangleArea(double a, double b, double c) {
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  const double s = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  require(s > 0.0, ErrorKind::DegenerateInput,
          "degenerate triangle in mesh construction");
  return 0.25 * std::sqrt(s);
}

// cot of the angle opposite side `a` in a triangle with sides a, b, c.
double cotOpposite(double a, double b, double c, double area) {
  return (b * b + c * c - a * a) / (4.0 * area);
}

}  // namespace

double ConeSpec::spacing() const { return radius / ringCount(); }

int ConeSpec::ringCount() const { return baseRings * (1 << refinementLevel); }

ConeSpec ConeSpec::refined(int extraLevels) const {
  ConeSpec out = *this;
  out.refinementLevel += extraLevels;
  return out;
}

double coneDistance(double totalAngle, const ConePoint& a, const ConePoint& b) {
  require(totalAngle > 0.0, ErrorKind::InvalidSpec,
          "cone total angle must be positive");
  require(a.r >= 0.0 && b.r >= 0.0, ErrorKind::OutOfDomain,
          "cone radii must be nonnegative");
  const double raw =
      std::abs(reduceAngle(a.phi, totalAngle) - reduceAngle(b.phi, totalAngle));
  const double gap = std::min(raw, totalAngle - raw);
  if (gap >= kPi) return a.r + b.r;  // geodesic passes through the apex
  const double d2 =
      a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * std::cos(gap);
  return std::sqrt(std::max(d2, 0.0));
}

void DomainMesh::finalize() {
  const int V = vertexCount();
  require(V > 0, ErrorKind::DegenerateInput, "mesh has no vertices");
  require(static_cast<int>(measures.size()) == V, ErrorKind::Inconsistency,
          "measure array size mismatch");
  require(static_cast<int>(boundaryFlags.size()) == V, ErrorKind::Inconsistency,
          "boundary flag array size mismatch");
  for (double mu : measures) {
    require(mu > 0.0, ErrorKind::DegenerateInput,
            "vertex measures must be positive");
  }
  for (const Edge& e : edges) {
    require(e.i >= 0 && e.i < V && e.j >= 0 && e.j < V && e.i != e.j,
            ErrorKind::Inconsistency, "edge endpoints out of range");
    require(e.weight >= 0.0, ErrorKind::InvalidSpec,
            "edge weights must be nonnegative");
    require(e.length > 0.0, ErrorKind::InvalidSpec,
            "edge lengths must be positive");
  }
  for (const Triangle& t : triangles) {
    require(t.a >= 0 && t.a < V && t.b >= 0 && t.b < V && t.c >= 0 &&
                t.c < V && t.a != t.b && t.b != t.c && t.a != t.c,
            ErrorKind::Inconsistency, "triangle corners out of range");
  }

  adjacencyOffsets.assign(V + 1, 0);
  for (const Edge& e : edges) {
    ++adjacencyOffsets[e.i + 1];
    ++adjacencyOffsets[e.j + 1];
  }
  for (int v = 0; v < V; ++v) adjacencyOffsets[v + 1] += adjacencyOffsets[v];
  adjacency.assign(adjacencyOffsets.back(), Neighbor{});
  std::vector<int> cursor(adjacencyOffsets.begin(), adjacencyOffsets.end() - 1);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    adjacency[cursor[edges[e].i]++] = Neighbor{edges[e].j, e};
    adjacency[cursor[edges[e].j]++] = Neighbor{edges[e].i, e};
  }

  // Ring lookup structure for windowed ball queries: valid when vertices are
  // grouped into contiguous rings of constant radius at multiples of the
  // chart spacing, each ring sorted by angle (true for built cone meshes).
  ringStart.clear();
  if (cone) {
    const double h = cone->spacing();
    const int rings = cone->ringCount();
    std::vector<int> start;
    int previousRing = -1;
    bool ok = true;
    for (int v = 0; v < V && ok; ++v) {
      const double exact = vertices[v].r / h;
      const int ring = static_cast<int>(std::lround(exact));
      ok = ring >= 0 && ring <= rings && std::abs(exact - ring) < 1e-9;
      if (!ok) break;
      if (ring == previousRing) {
        ok = vertices[v].phi > vertices[v - 1].phi;
      } else {
        ok = ring == previousRing + 1;
        start.push_back(v);
        previousRing = ring;
      }
    }
    if (ok && previousRing == rings) {
      ringStart = std::move(start);
      ringStart.push_back(V);
    }
  }
}

double DomainMesh::totalMeasure() const {
  double sum = 0.0;
  for (double mu : measures) sum += mu;
  return sum;
}

int DomainMesh::eulerCharacteristic() const {
  return vertexCount() - static_cast<int>(edges.size()) +
         static_cast<int>(triangles.size());
}

DomainMesh buildConeMesh(const ConeSpec& spec) {
  require(spec.totalAngle > 0.0, ErrorKind::InvalidSpec,
          "cone total angle must be positive");
  require(spec.radius > 0.0, ErrorKind::InvalidSpec,
          "cone radius must be positive");
  require(spec.refinementLevel >= 0, ErrorKind::InvalidSpec,
          "refinement level must be nonnegative");
  require(spec.baseRings >= 2, ErrorKind::InvalidSpec,
          "cone mesh needs at least two rings");

  const double theta = spec.totalAngle;
  const int rings = spec.ringCount();
  const double h = spec.spacing();
  // Angular sector count per ring step, chosen so cells are near-isotropic
  // (arc length of one cell on ring i is theta*i*h/(m*i) ~= h).
  const int m = std::max<long>(3, std::lround(theta));

  DomainMesh mesh;
  mesh.cone = spec;
  mesh.curvature = theta <= 2.0 * kPi + 1e-12
                       ? CurvatureBound::bounded(0.0)
                       : CurvatureBound::unboundedBelow();

  mesh.vertices.push_back(ConePoint{0.0, 0.0});  // apex
  std::vector<int> firstOfRing(rings + 1, 0);
  for (int i = 1; i <= rings; ++i) {
    firstOfRing[i] = mesh.vertexCount();
    const int count = m * i;
    for (int j = 0; j < count; ++j) {
      mesh.vertices.push_back(ConePoint{i * h, theta * j / count});
    }
  }

  // Apex fan.
  for (int j = 0; j < m; ++j) {
    mesh.triangles.push_back(
        {0, firstOfRing[1] + j, firstOfRing[1] + (j + 1) % m});
  }
  // Annulus strips: merge the two circular vertex sequences, at each step
  // advancing whichever side yields the shorter new diagonal. This keeps the
  // strip close to Delaunay, so cotangent weights stay nonnegative.
  for (int i = 1; i < rings; ++i) {
    const int Mi = m * i, Mo = m * (i + 1);
    const int in0 = firstOfRing[i], out0 = firstOfRing[i + 1];
    int a = 0, b = 0;
    while (a < Mi || b < Mo) {
      bool advanceOuter;
      if (a == Mi) {
        advanceOuter = true;
      } else if (b == Mo) {
        advanceOuter = false;
      } else {
        // Diagonal created by each choice, measured by angular mismatch
        // (radii are fixed, so the smaller mismatch is the shorter chord).
        const double gapOuter = std::abs(theta * a / Mi - theta * (b + 1) / Mo);
        const double gapInner = std::abs(theta * (a + 1) / Mi - theta * b / Mo);
        advanceOuter = gapOuter <= gapInner;
      }
      if (advanceOuter) {
        mesh.triangles.push_back(
            {in0 + a % Mi, out0 + b % Mo, out0 + (b + 1) % Mo});
        ++b;
      } else {
        mesh.triangles.push_back(
            {in0 + a % Mi, out0 + b % Mo, in0 + (a + 1) % Mi});
        ++a;
      }
    }
  }

  // Cotangent weights and barycentric measures from exact edge lengths. Each
  // triangle unrolls isometrically to the plane, so intrinsic lengths
  // determine its angles and area.
  mesh.measures.assign(mesh.vertexCount(), 0.0);
  std::map<std::pair<int, int>, DomainMesh::Edge> edgeTable;
  auto edgeKey = [](int u, int v) {
    return std::make_pair(std::min(u, v), std::max(u, v));
  };
  for (const DomainMesh::Triangle& t : mesh.triangles) {
    const double la = coneDistance(theta, mesh.vertices[t.b], mesh.vertices[t.c]);
    const double lb = coneDistance(theta, mesh.vertices[t.c], mesh.vertices[t.a]);
    const double lc = coneDistance(theta, mesh.vertices[t.a], mesh.vertices[t.b]);
    const double area = triangleArea(la, lb, lc);
    const double third = area / 3.0;
    mesh.measures[t.a] += third;
    mesh.measures[t.b] += third;
    mesh.measures[t.c] += third;

    struct Side {
      int u, v;
      double len, cot;
    } sides[3] = {
        {t.b, t.c, la, cotOpposite(la, lb, lc, area)},
        {t.c, t.a, lb, cotOpposite(lb, lc, la, area)},
        {t.a, t.b, lc, cotOpposite(lc, la, lb, area)},
    };
    for (const Side& s : sides) {
      DomainMesh::Edge& e = edgeTable[edgeKey(s.u, s.v)];
      e.i = std::min(s.u, s.v);
      e.j = std::max(s.u, s.v);
      e.length = s.len;
      e.weight += 0.5 * s.cot;
    }
  }
  mesh.edges.reserve(edgeTable.size());
  for (auto& [key, e] : edgeTable) {
    // Right angles produce cotangents that are zero only up to rounding.
    if (e.weight < 0.0 && e.weight > -1e-12) e.weight = 0.0;
    require(e.weight >= 0.0, ErrorKind::InvalidSpec,
            "cone mesh produced a negative cotangent weight");
    mesh.edges.push_back(e);
  }

  mesh.boundaryFlags.assign(mesh.vertexCount(), 0);
  for (int v = firstOfRing[rings]; v < mesh.vertexCount(); ++v) {
    mesh.boundaryFlags[v] = 1;
  }

  mesh.finalize();
  return mesh;
}

double geodesicDistance(const DomainMesh& mesh, int i, int j) {
  const int V = mesh.vertexCount();
  require(i >= 0 && i < V && j >= 0 && j < V, ErrorKind::OutOfDomain,
          "vertex index out of range");
  if (mesh.cone) {
    return coneDistance(mesh.cone->totalAngle, mesh.vertices[i],
                        mesh.vertices[j]);
  }
  return graphDistance(mesh, i, j);
}

double geodesicDistance(const DomainMesh& mesh, const ConePoint& a,
                        const ConePoint& b) {
  require(mesh.cone.has_value(), ErrorKind::InvalidSpec,
          "chart-point distance needs a cone chart");
  const double R = mesh.cone->radius * (1.0 + 1e-12);
  require(a.r <= R && b.r <= R, ErrorKind::OutOfDomain,
          "chart point outside the cone radius");
  return coneDistance(mesh.cone->totalAngle, a, b);
}

namespace {

// Dijkstra from i until j settles; returns settled distance and fills parents.
// Cone charts supply an exact-distance heuristic: it never overestimates the
// edge-path length, so the settled distance is unchanged, but among the many
// near-tied shortest paths the search prefers ones hugging the true geodesic
// (important for corridor straightening below).
double dijkstraWithParents(const DomainMesh& mesh, int i, int j,
                           std::vector<int>& parent) {
  const int V = mesh.vertexCount();
  std::vector<double> dist(V, std::numeric_limits<double>::infinity());
  parent.assign(V, -1);
  auto heuristic = [&](int v) {
    if (!mesh.cone) return 0.0;
    return coneDistance(mesh.cone->totalAngle, mesh.vertices[v],
                        mesh.vertices[j]) *
           (1.0 + 1e-9);
  };
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  dist[i] = 0.0;
  queue.push({heuristic(i), i});
  while (!queue.empty()) {
    auto [f, v] = queue.top();
    queue.pop();
    if (v == j) return dist[v];
    if (f > dist[v] + heuristic(v)) continue;
    for (int idx = mesh.adjacencyOffsets[v]; idx < mesh.adjacencyOffsets[v + 1];
         ++idx) {
      const auto& nb = mesh.adjacency[idx];
      const double nd = dist[v] + mesh.edges[nb.edge].length;
      if (nd < dist[nb.vertex]) {
        dist[nb.vertex] = nd;
        parent[nb.vertex] = v;
        queue.push({nd + heuristic(nb.vertex), nb.vertex});
      }
    }
  }
  fail(ErrorKind::Topology, "mesh is not connected");
}

}  // namespace

double graphDistance(const DomainMesh& mesh, int i, int j) {
  const int V = mesh.vertexCount();
  require(i >= 0 && i < V && j >= 0 && j < V, ErrorKind::OutOfDomain,
          "vertex index out of range");
  if (i == j) return 0.0;
  std::vector<int> parent;
  return dijkstraWithParents(mesh, i, j, parent);
}

std::vector<int> shortestVertexPath(const DomainMesh& mesh, int i, int j) {
  const int V = mesh.vertexCount();
  require(i >= 0 && i < V && j >= 0 && j < V, ErrorKind::OutOfDomain,
          "vertex index out of range");
  if (i == j) return {i};
  std::vector<int> parent;
  dijkstraWithParents(mesh, i, j, parent);
  std::vector<int> path;
  for (int v = j; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  require(path.front() == i, ErrorKind::Topology, "broken shortest-path tree");
  return path;
}

namespace {

struct P2 {
  double x = 0.0, y = 0.0;
};

double cross2(const P2& o, const P2& a, const P2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dist2d(const P2& a, const P2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool samePoint(const P2& a, const P2& b) { return a.x == b.x && a.y == b.y; }

// Wraps an angle difference into (-period/2, period/2].
double signedReduce(double d, double period) {
  d = std::fmod(d, period);
  if (d <= -0.5 * period) d += period;
  if (d > 0.5 * period) d -= period;
  return d;
}

// Outcome of pulling a corridor path taut: its length plus the mesh vertices
// the taut path bends around (in traversal order).
struct TautResult {
  double length = 0.0;
  std::vector<int> pinned;
};

// Taut path through an ordered portal sequence (funnel algorithm).  Portal
// endpoints carry the vertex ids they develop from, so committed funnel
// apexes can be reported back as pinned vertices.
TautResult funnelPath(const P2& start, std::vector<P2> left,
                      std::vector<P2> right, std::vector<int> leftId,
                      std::vector<int> rightId, const P2& end) {
  left.push_back(end);
  right.push_back(end);
  leftId.push_back(-1);
  rightId.push_back(-1);
  P2 apex = start, l = start, r = start;
  int apexIdx = -1, leftIdx = -1, rightIdx = -1;
  int lId = -1, rId = -1;
  TautResult out;
  for (int i = 0; i < static_cast<int>(left.size()); ++i) {
    const P2 nl = left[i], nr = right[i];
    if (cross2(apex, r, nr) >= 0.0) {
      if (samePoint(apex, r) || cross2(apex, l, nr) < 0.0) {
        r = nr;
        rId = rightId[i];
        rightIdx = i;
      } else {  // right boundary crossed the left one: commit the left point
        out.length += dist2d(apex, l);
        if (lId >= 0) out.pinned.push_back(lId);
        apex = l;
        apexIdx = leftIdx;
        l = apex;
        r = apex;
        rId = lId;
        leftIdx = rightIdx = apexIdx;
        i = apexIdx;
        continue;
      }
    }
    if (cross2(apex, l, nl) <= 0.0) {
      if (samePoint(apex, l) || cross2(apex, r, nl) > 0.0) {
        l = nl;
        lId = leftId[i];
        leftIdx = i;
      } else {
        out.length += dist2d(apex, r);
        if (rId >= 0) out.pinned.push_back(rId);
        apex = r;
        apexIdx = rightIdx;
        l = apex;
        r = apex;
        lId = rId;
        leftIdx = rightIdx = apexIdx;
        i = apexIdx;
        continue;
      }
    }
  }
  out.length += dist2d(apex, end);
  return out;
}

// Corridor straightening for one apex-free path (all interior path vertices
// have r > 0, so every angle difference develops unambiguously).
TautResult straightenApexFree(const DomainMesh& mesh,
                              const std::vector<int>& path) {
  const double theta = mesh.cone->totalAngle;
  const int k = static_cast<int>(path.size());
  auto point = [&](int v) { return mesh.vertices[v]; };
  if (k <= 1) return {};
  if (k == 2) return {coneDistance(theta, point(path[0]), point(path[1])), {}};

  // Develop the path vertices with cumulatively unwrapped angles.
  std::vector<double> anchor(k);
  anchor[0] = point(path[0]).phi;
  for (int t = 1; t < k; ++t) {
    anchor[t] = anchor[t - 1] +
                signedReduce(point(path[t]).phi - point(path[t - 1]).phi, theta);
  }
  std::map<int, P2> developed;
  auto develop = [&](int v, int anchorT) -> P2 {
    auto it = developed.find(v);
    if (it != developed.end()) return it->second;
    const ConePoint p = point(v);
    const double a =
        p.r == 0.0 ? 0.0
                   : anchor[anchorT] +
                         signedReduce(p.phi - point(path[anchorT]).phi, theta);
    const P2 out{p.r * std::cos(a), p.r * std::sin(a)};
    developed.emplace(v, out);
    return out;
  };
  for (int t = 0; t < k; ++t) {
    developed[path[t]] =
        P2{point(path[t]).r * std::cos(anchor[t]),
           point(path[t]).r * std::sin(anchor[t])};
  }

  std::set<std::array<int, 3>> triangleSet;
  for (const auto& t : mesh.triangles) {
    std::array<int, 3> key{t.a, t.b, t.c};
    std::sort(key.begin(), key.end());
    triangleSet.insert(key);
  }
  auto hasTriangle = [&](int a, int b, int c) {
    std::array<int, 3> key{a, b, c};
    std::sort(key.begin(), key.end());
    return triangleSet.count(key) > 0;
  };

  // The straightened path should track the development chord between the
  // endpoints; fans are chosen on whichever side of each path vertex lies
  // closer to that chord.
  const P2 devS = developed.at(path.front());
  const P2 devE = developed.at(path.back());
  auto chordDistance = [&](const P2& p) {
    const double ex = devE.x - devS.x, ey = devE.y - devS.y;
    const double n2 = ex * ex + ey * ey;
    double s = n2 == 0.0 ? 0.0
                         : ((p.x - devS.x) * ex + (p.y - devS.y) * ey) / n2;
    s = std::clamp(s, 0.0, 1.0);
    return std::hypot(p.x - (devS.x + s * ex), p.y - (devS.y + s * ey));
  };

  // Walk the fans around every interior path vertex, collecting the corridor
  // triangle sequence.
  std::vector<std::array<int, 3>> corridor;
  for (int t = 1; t + 1 < k; ++t) {
    const int v = path[t];
    const P2 pv = develop(v, t);
    std::vector<std::pair<double, int>> ring;
    for (int idx = mesh.adjacencyOffsets[v]; idx < mesh.adjacencyOffsets[v + 1];
         ++idx) {
      const int w = mesh.adjacency[idx].vertex;
      const P2 pw = develop(w, t);
      ring.push_back({std::atan2(pw.y - pv.y, pw.x - pv.x), w});
    }
    std::sort(ring.begin(), ring.end());
    const int deg = static_cast<int>(ring.size());
    int prevPos = -1, nextPos = -1;
    for (int r = 0; r < deg; ++r) {
      if (ring[r].second == path[t - 1]) prevPos = r;
      if (ring[r].second == path[t + 1]) nextPos = r;
    }
    require(prevPos >= 0 && nextPos >= 0, ErrorKind::Topology,
            "shortest path leaves the edge graph");
    auto arc = [&](bool ccw) {
      std::vector<int> fan;
      for (int r = prevPos;; r = ccw ? (r + 1) % deg : (r + deg - 1) % deg) {
        fan.push_back(ring[r].second);
        if (r == nextPos && fan.size() > 1) break;
        if (static_cast<int>(fan.size()) > deg) return std::vector<int>{};
      }
      for (size_t s = 0; s + 1 < fan.size(); ++s) {
        if (!hasTriangle(v, fan[s], fan[s + 1])) return std::vector<int>{};
      }
      return fan;
    };
    auto score = [&](const std::vector<int>& fan) {
      if (fan.empty()) return std::numeric_limits<double>::infinity();
      double sum = 0.0;
      for (int w : fan) sum += chordDistance(develop(w, t));
      return sum / static_cast<double>(fan.size());
    };
    std::vector<int> fan = arc(true), alt = arc(false);
    if (score(alt) < score(fan)) fan.swap(alt);
    require(!fan.empty(), ErrorKind::Topology,
            "no triangle fan connects consecutive path edges");
    for (size_t s = 0; s + 1 < fan.size(); ++s) {
      std::array<int, 3> tri{v, fan[s], fan[s + 1]};
      if (!corridor.empty()) {
        std::array<int, 3> a = corridor.back(), b = tri;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b) continue;
      }
      corridor.push_back(tri);
    }
  }
  if (corridor.empty()) {
    TautResult out;
    for (int t = 1; t < k; ++t) {
      out.length += coneDistance(theta, point(path[t - 1]), point(path[t]));
      if (t + 1 < k) out.pinned.push_back(path[t]);
    }
    return out;
  }

  // Portals between consecutive corridor triangles, oriented so that `left`
  // is to the left of the walking direction.
  auto centroid = [&](const std::array<int, 3>& tri, int anchorT) {
    P2 c;
    for (int v : tri) {
      const P2 p = develop(v, anchorT);
      c.x += p.x / 3.0;
      c.y += p.y / 3.0;
    }
    return c;
  };
  std::vector<P2> lefts, rights;
  std::vector<int> leftIds, rightIds;
  for (size_t r = 0; r + 1 < corridor.size(); ++r) {
    int shared[2], count = 0;
    for (int u : corridor[r]) {
      for (int w : corridor[r + 1]) {
        if (u == w && count < 2) shared[count++] = u;
      }
    }
    require(count == 2, ErrorKind::Topology,
            "corridor triangles do not share an edge");
    const P2 a = developed.at(shared[0]), b = developed.at(shared[1]);
    const P2 ca = centroid(corridor[r], 0), cb = centroid(corridor[r + 1], 0);
    const P2 dir{cb.x - ca.x, cb.y - ca.y};
    const P2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const bool aLeft = dir.x * (a.y - mid.y) - dir.y * (a.x - mid.x) > 0.0;
    lefts.push_back(aLeft ? a : b);
    rights.push_back(aLeft ? b : a);
    leftIds.push_back(aLeft ? shared[0] : shared[1]);
    rightIds.push_back(aLeft ? shared[1] : shared[0]);
  }
  return funnelPath(developed.at(path.front()), std::move(lefts),
                    std::move(rights), std::move(leftIds), std::move(rightIds),
                    developed.at(path.back()));
}

// Straightens a vertex path, splitting at the cone point (whose neighborhood
// does not develop into the plane).
TautResult straightenPath(const DomainMesh& mesh, const std::vector<int>& path) {
  TautResult total;
  size_t begin = 0;
  auto accumulate = [&](size_t from, size_t to) {
    TautResult part = straightenApexFree(
        mesh, std::vector<int>(path.begin() + from, path.begin() + to + 1));
    total.length += part.length;
    for (int v : part.pinned) total.pinned.push_back(v);
  };
  for (size_t t = 1; t + 1 < path.size(); ++t) {
    if (mesh.vertices[path[t]].r == 0.0) {
      accumulate(begin, t);
      total.pinned.push_back(path[t]);  // the cone point pins the path
      begin = t;
    }
  }
  accumulate(begin, path.size() - 1);
  return total;
}

// Vertex walk shadowing the exact chart geodesic: sample the geodesic at
// half-cell steps, snap each sample to its nearest vertex, and stitch the
// snaps together with shortest edge paths.  The triangle corridor around this
// walk contains the true geodesic, so one straightening pass pulls the path
// essentially taut.
std::vector<int> chartSeededPath(const DomainMesh& mesh, int i, int j) {
  const double theta = mesh.cone->totalAngle;
  const ConePoint a = mesh.vertices[i], b = mesh.vertices[j];
  const double h = mesh.cone->spacing();
  const double len = coneDistance(theta, a, b);
  const int samples =
      std::min(4096, std::max(2, static_cast<int>(std::ceil(len / (0.5 * h)))));

  std::vector<ConePoint> trace;
  const double gap = signedReduce(b.phi - a.phi, theta);
  if (std::abs(gap) < kPi && a.r > 0.0 && b.r > 0.0) {
    // Develop the wedge between the two rays and walk the straight chord.
    const P2 A{a.r, 0.0};
    const P2 B{b.r * std::cos(gap), b.r * std::sin(gap)};
    for (int s = 1; s < samples; ++s) {
      const double t = static_cast<double>(s) / samples;
      const P2 p{A.x + t * (B.x - A.x), A.y + t * (B.y - A.y)};
      const double r = std::hypot(p.x, p.y);
      trace.push_back(ConePoint{r, a.phi + std::atan2(p.y, p.x)});
    }
  } else {
    // The geodesic runs through the apex: two radial segments.
    for (int s = 1; s < samples; ++s) {
      const double t = static_cast<double>(s) / samples;
      const double along = t * (a.r + b.r);
      trace.push_back(along <= a.r
                          ? ConePoint{a.r - along, a.phi}
                          : ConePoint{along - a.r, b.phi});
    }
  }

  std::vector<int> path{i};
  auto extendTo = [&](int v) {
    if (v == path.back()) return;
    const std::vector<int> bridge = shortestVertexPath(mesh, path.back(), v);
    path.insert(path.end(), bridge.begin() + 1, bridge.end());
  };
  for (const ConePoint& p : trace) extendTo(nearestVertex(mesh, p));
  extendTo(j);
  return path;
}

}  // namespace

int nearestVertex(const DomainMesh& mesh, const ConePoint& p) {
  require(mesh.cone.has_value(), ErrorKind::InvalidSpec,
          "nearest-vertex queries need a cone chart");
  const double theta = mesh.cone->totalAngle;
  int best = 0;
  double bestD = std::numeric_limits<double>::infinity();
  auto consider = [&](int v) {
    const double d = coneDistance(theta, p, mesh.vertices[v]);
    if (d < bestD) {
      bestD = d;
      best = v;
    }
  };
  if (mesh.ringStart.size() < 2) {
    for (int v = 0; v < mesh.vertexCount(); ++v) consider(v);
    return best;
  }
  const int rings = static_cast<int>(mesh.ringStart.size()) - 1;
  const double h = mesh.cone->spacing();
  const int ring = static_cast<int>(std::floor(p.r / h));
  for (int r = std::max(0, ring - 1); r <= std::min(rings - 1, ring + 2); ++r) {
    const int lo = mesh.ringStart[r], hi = mesh.ringStart[r + 1];
    const int count = hi - lo;
    if (count == 1) {
      consider(lo);
      continue;
    }
    const long idx = std::lround(reduceAngle(p.phi, theta) / theta * count);
    for (long k = idx - 1; k <= idx + 1; ++k) {
      consider(lo + static_cast<int>((k % count + count) % count));
    }
  }
  return best;
}

double surfaceDistance(const DomainMesh& mesh, int i, int j) {
  const int V = mesh.vertexCount();
  require(i >= 0 && i < V && j >= 0 && j < V, ErrorKind::OutOfDomain,
          "vertex index out of range");
  if (i == j) return 0.0;
  if (!mesh.cone) return graphDistance(mesh, i, j);

  // Pull a seed walk taut in its triangle corridor, re-seed the corridor
  // around the vertices the taut path bends at, and repeat while the length
  // improves.  Two seeds are straightened: a walk shadowing the chart
  // geodesic (whose corridor already contains the taut limit) and the
  // shortest edge path (chart-free safety net).
  double bestLength = std::numeric_limits<double>::infinity();
  for (const bool chartSeed : {true, false}) {
    std::vector<int> path =
        chartSeed ? chartSeededPath(mesh, i, j) : shortestVertexPath(mesh, i, j);
    TautResult best = straightenPath(mesh, path);
    for (int iter = 0; iter < 8; ++iter) {
      std::vector<int> next;
      next.push_back(i);
      for (int v : best.pinned) {
        if (v == next.back()) continue;
        const std::vector<int> bridge =
            shortestVertexPath(mesh, next.back(), v);
        next.insert(next.end(), bridge.begin() + 1, bridge.end());
      }
      if (j != next.back()) {
        const std::vector<int> bridge = shortestVertexPath(mesh, next.back(), j);
        next.insert(next.end(), bridge.begin() + 1, bridge.end());
      }
      if (next == path) break;
      TautResult candidate = straightenPath(mesh, next);
      if (candidate.length >= best.length - 1e-12 * (1.0 + best.length)) break;
      best = std::move(candidate);
      path = std::move(next);
    }
    bestLength = std::min(bestLength, best.length);
  }
  return bestLength;
}

namespace {

MetricBall chartBall(const DomainMesh& mesh, const ConePoint& center,
                     double radius) {
  const double theta = mesh.cone->totalAngle;
  MetricBall ball;
  auto consider = [&](int v) {
    const double d = coneDistance(theta, center, mesh.vertices[v]);
    if (d < radius) {
      ball.vertices.push_back(v);
      ball.distances.push_back(d);
      ball.measure += mesh.measures[v];
    }
  };

  if (mesh.ringStart.size() < 2) {
    for (int v = 0; v < mesh.vertexCount(); ++v) consider(v);
    return ball;
  }

  // Windowed scan: per ring, only the angular interval that can be within
  // `radius` of the center (plus whole rings reachable through the apex).
  const int rings = static_cast<int>(mesh.ringStart.size()) - 1;
  for (int ring = 0; ring < rings; ++ring) {
    const int lo = mesh.ringStart[ring], hi = mesh.ringStart[ring + 1];
    const double rv = mesh.vertices[lo].r;
    if (std::abs(center.r - rv) >= radius) continue;
    if (center.r + rv < radius || center.r == 0.0 || rv == 0.0) {
      for (int v = lo; v < hi; ++v) consider(v);
      continue;
    }
    const double cosBound =
        (center.r * center.r + rv * rv - radius * radius) /
        (2.0 * center.r * rv);
    double gapMax = cosBound <= -1.0 ? kPi : std::acos(std::min(cosBound, 1.0));
    gapMax = std::min(gapMax + 1e-9, 0.5 * theta);
    const double phiC = reduceAngle(center.phi, theta);
    auto scanInterval = [&](double a, double b) {
      // Vertices of this ring with angle in [a, b] (wrapped into [0, theta)).
      auto beginIt = mesh.vertices.begin() + lo;
      auto endIt = mesh.vertices.begin() + hi;
      auto cmp = [](const ConePoint& p, double value) { return p.phi < value; };
      if (a <= b) {
        auto first = std::lower_bound(beginIt, endIt, a, cmp);
        for (auto it = first; it != endIt && it->phi <= b; ++it) {
          consider(static_cast<int>(it - mesh.vertices.begin()));
        }
      } else {  // wrapped interval [a, theta) U [0, b]
        auto first = std::lower_bound(beginIt, endIt, a, cmp);
        for (auto it = first; it != endIt; ++it) {
          consider(static_cast<int>(it - mesh.vertices.begin()));
        }
        for (auto it = beginIt; it != endIt && it->phi <= b; ++it) {
          consider(static_cast<int>(it - mesh.vertices.begin()));
        }
      }
    };
    if (2.0 * gapMax >= theta - 1e-15) {
      for (int v = lo; v < hi; ++v) consider(v);
    } else {
      scanInterval(reduceAngle(phiC - gapMax, theta),
                   reduceAngle(phiC + gapMax, theta));
    }
  }
  // Window scanning can visit vertices out of index order; normalize.
  std::vector<int> order(ball.vertices.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return ball.vertices[x] < ball.vertices[y];
  });
  MetricBall sorted;
  sorted.measure = ball.measure;
  sorted.vertices.reserve(order.size());
  sorted.distances.reserve(order.size());
  for (int idx : order) {
    sorted.vertices.push_back(ball.vertices[idx]);
    sorted.distances.push_back(ball.distances[idx]);
  }
  return sorted;
}

}  // namespace

MetricBall metricBall(const DomainMesh& mesh, int center, double radius) {
  require(center >= 0 && center < mesh.vertexCount(), ErrorKind::OutOfDomain,
          "ball center out of range");
  require(radius > 0.0, ErrorKind::Parameter, "ball radius must be positive");
  if (mesh.cone) return chartBall(mesh, mesh.vertices[center], radius);

  // Chartless fallback: truncated Dijkstra; distances are path distances.
  MetricBall ball;
  std::vector<double> dist(mesh.vertexCount(),
                           std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  dist[center] = 0.0;
  queue.push({0.0, center});
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (int idx = mesh.adjacencyOffsets[v]; idx < mesh.adjacencyOffsets[v + 1];
         ++idx) {
      const auto& nb = mesh.adjacency[idx];
      const double nd = d + mesh.edges[nb.edge].length;
      if (nd < radius && nd < dist[nb.vertex]) {
        dist[nb.vertex] = nd;
        queue.push({nd, nb.vertex});
      }
    }
  }
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    if (dist[v] < radius) {
      ball.vertices.push_back(v);
      ball.distances.push_back(dist[v]);
      ball.measure += mesh.measures[v];
    }
  }
  return ball;
}

MetricBall metricBall(const DomainMesh& mesh, const ConePoint& center,
                      double radius) {
  require(mesh.cone.has_value(), ErrorKind::InvalidSpec,
          "chart-point ball needs a cone chart");
  require(radius > 0.0, ErrorKind::Parameter, "ball radius must be positive");
  const double R = mesh.cone->radius * (1.0 + 1e-12);
  require(center.r <= R, ErrorKind::OutOfDomain,
          "ball center outside the cone radius");
  return chartBall(mesh, center, radius);
}

std::vector<double> distanceField(const DomainMesh& mesh,
                                  const std::vector<int>& sources) {
  require(!sources.empty(), ErrorKind::DegenerateInput,
          "distance field needs at least one source");
  const int V = mesh.vertexCount();
  std::vector<double> dist(V, std::numeric_limits<double>::infinity());
  if (mesh.cone) {
    const double theta = mesh.cone->totalAngle;
    for (int v = 0; v < V; ++v) {
      for (int s : sources) {
        dist[v] = std::min(
            dist[v], coneDistance(theta, mesh.vertices[v], mesh.vertices[s]));
      }
    }
    return dist;
  }
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  for (int s : sources) {
    require(s >= 0 && s < V, ErrorKind::OutOfDomain, "source out of range");
    dist[s] = 0.0;
    queue.push({0.0, s});
  }
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (int idx = mesh.adjacencyOffsets[v]; idx < mesh.adjacencyOffsets[v + 1];
         ++idx) {
      const auto& nb = mesh.adjacency[idx];
      const double nd = d + mesh.edges[nb.edge].length;
      if (nd < dist[nb.vertex]) {
        dist[nb.vertex] = nd;
        queue.push({nd, nb.vertex});
      }
    }
  }
  return dist;
}

ComparisonGeometry comparisonGeometry(const DomainMesh& mesh) {
  require(mesh.curvature.isBounded(), ErrorKind::InvalidSpec,
          "domain curvature is not bounded below");
  return ComparisonGeometry(mesh.dimension, *mesh.curvature.k);
}

}  // namespace harmlab
