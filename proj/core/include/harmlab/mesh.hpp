#pragma once

#include <optional>
#include <vector>

#include "harmlab/geometry.hpp"

namespace harmlab {

// Point in the polar chart of a cone: distance from the apex and angle in
// [0, totalAngle).  The flat disk is the special case totalAngle == 2*pi.
struct ConePoint {
  double r = 0.0;
  double phi = 0.0;
};

// Construction parameters for a triangulated metric cone of total apex angle
// totalAngle (0, +inf), geodesic radius `radius`, and dyadic refinement level
// `refinementLevel`.  The mesh has rings at radii i*h for
// h = radius / (baseRings * 2^refinementLevel).
struct ConeSpec {
  double totalAngle = 2.0 * 3.14159265358979323846;
  double radius = 1.0;
  int refinementLevel = 0;
  int baseRings = 8;

  double spacing() const;  // h above
  int ringCount() const;   // baseRings * 2^refinementLevel
  ConeSpec refined(int extraLevels = 1) const;
};

// A two-dimensional triangulated metric domain.  Vertices carry polar chart
// positions; edges carry symmetric nonnegative Laplacian weights (cotangent
// weights for built meshes) and exact metric lengths; each vertex carries its
// barycentric cell measure.  When `cone` is present, distances are evaluated
// with the closed-form cone metric; otherwise queries fall back to
// shortest paths over edge lengths.
struct DomainMesh {
  int dimension = 2;
  CurvatureBound curvature = CurvatureBound::bounded(0.0);
  std::optional<ConeSpec> cone;

  std::vector<ConePoint> vertices;
  struct Edge {
    int i = 0, j = 0;
    double weight = 0.0;  // Laplacian coupling, >= 0
    double length = 0.0;  // metric length, > 0
  };
  std::vector<Edge> edges;
  struct Triangle {
    int a = 0, b = 0, c = 0;
  };
  std::vector<Triangle> triangles;
  std::vector<double> measures;      // barycentric vertex measures
  std::vector<char> boundaryFlags;   // 1 on the outer boundary

  // Derived connectivity, rebuilt by finalize(): CSR adjacency over edges.
  std::vector<int> adjacencyOffsets;
  struct Neighbor {
    int vertex = 0;
    int edge = 0;
  };
  std::vector<Neighbor> adjacency;
  // Derived ring lookup (first vertex of each radial ring, apex = ring 0),
  // present when the vertex layout matches the built cone pattern; speeds up
  // ball queries.  Empty otherwise.
  std::vector<int> ringStart;

  int vertexCount() const { return static_cast<int>(vertices.size()); }
  bool isInterior(int v) const { return boundaryFlags[v] == 0; }

  // Validates array sizes and symmetry assumptions and rebuilds adjacency.
  void finalize();

  double totalMeasure() const;
  // V - E + F; equals 1 for a triangulated disk.
  int eulerCharacteristic() const;
};

// Exact geodesic distance between two chart points of the cone with total
// apex angle `totalAngle`: the chordal law of cosines when the reduced angle
// gap is below pi, and the path through the apex otherwise.
double coneDistance(double totalAngle, const ConePoint& a, const ConePoint& b);

// Builds the ring/fan triangulation of the cone described by `spec`.
// Vertices are ordered apex first, then rings by increasing radius, each ring
// by increasing angle; the outer ring is the boundary.
DomainMesh buildConeMesh(const ConeSpec& spec);

// Distance between mesh vertices: closed-form for cone charts, otherwise the
// shortest path over edge lengths.
double geodesicDistance(const DomainMesh& mesh, int i, int j);
// Chart-point overload; requires a cone chart and in-domain points.
double geodesicDistance(const DomainMesh& mesh, const ConePoint& a,
                        const ConePoint& b);

// Shortest path over edge lengths (Dijkstra), regardless of chart.
double graphDistance(const DomainMesh& mesh, int i, int j);

// Vertex sequence of a shortest edge path from i to j.
std::vector<int> shortestVertexPath(const DomainMesh& mesh, int i, int j);

// Vertex nearest to a chart point (cone charts only).
int nearestVertex(const DomainMesh& mesh, const ConePoint& p);

// Length of the shortest surface path from vertex i to vertex j constrained
// to the triangle corridor around the shortest edge path: the corridor is
// developed isometrically into the plane and the path pulled taut there.
// Edge paths alone over-estimate distances by a direction-quantization factor
// that does not vanish under refinement; the taut corridor path removes that
// factor while remaining a genuine path through mesh triangles.  Falls back
// to the edge path length for meshes without a cone chart.
double surfaceDistance(const DomainMesh& mesh, int i, int j);

// Open metric ball around a vertex: member vertices in ascending index order
// with their center distances and total measure.
struct MetricBall {
  std::vector<int> vertices;
  std::vector<double> distances;
  double measure = 0.0;
};
MetricBall metricBall(const DomainMesh& mesh, int center, double radius);
// Chart-point center (cone charts only).
MetricBall metricBall(const DomainMesh& mesh, const ConePoint& center,
                      double radius);

// Exact (chart) or shortest-path (chartless) distance from every vertex to
// the nearest vertex of `sources`.
std::vector<double> distanceField(const DomainMesh& mesh,
                                  const std::vector<int>& sources);

// Comparison geometry carried by the mesh; fails for meshes whose curvature
// is not bounded below.
ComparisonGeometry comparisonGeometry(const DomainMesh& mesh);

}  // namespace harmlab
