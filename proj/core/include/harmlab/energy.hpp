#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "harmlab/mesh.hpp"
#include "harmlab/target.hpp"

namespace harmlab {

// A map from mesh vertices into an NPC target.  Boundary entries carry the
// Dirichlet data; solvers rewrite interior entries only.
struct MapState {
  const DomainMesh* domain = nullptr;
  NpcTarget target;
  std::vector<TargetPoint> values;

  MapState() = default;
  MapState(const DomainMesh& mesh, NpcTarget targetSpace,
           std::vector<TargetPoint> vertexValues);

  int vertexCount() const { return static_cast<int>(values.size()); }
  // Checks that every vertex has a value admissible for the target.
  void validate() const;
};

// Builds a real-valued map from a chart function (cone meshes).
MapState makeScalarMap(const DomainMesh& mesh,
                       const std::function<double(const ConePoint&)>& f);
// Builds the constant map with the given value everywhere.
MapState makeConstantMap(const DomainMesh& mesh, const NpcTarget& target,
                         const TargetPoint& value);

// Per-vertex energy density.  `epsilon` identifies the ball-averaged density
// with that radius; when absent the field is the graph density derived from
// the Laplacian weights (the small-radius surrogate).
struct EnergyDensityField {
  double p = 2.0;
  std::optional<double> epsilon;
  std::vector<double> density;
  // Vertices whose epsilon-ball reaches the mesh boundary; their densities
  // average over a clipped ball and are excluded from interior statistics.
  // Empty for graph fields.
  std::vector<char> ballTouchesBoundary;
};

// Ball-averaged energy density at one vertex:
//   (n+p) / (c_{n,p} eps^{n+p}) * sum_{y in B_x(eps)} d_Y(u(x),u(y))^p mu_y
// with c_{n,p} the directional moment of the unit sphere (ballNormalization).
double approxEnergyDensity(const MapState& map, double p, double epsilon,
                           int x);
// Whole-mesh field; `threads` splits the vertex range, the per-vertex
// summation order is fixed so results are schedule-independent.
EnergyDensityField approxEnergyDensityField(const MapState& map, double p,
                                            double epsilon, int threads = 1);

// Quadratic graph Dirichlet energy: total = sum_edges w_ij d^2(u_i, u_j) and
// density e(x) = (1 / 2 mu_x) sum_{y ~ x} w_xy d^2(u(x), u(y)), so that
// sum_x e(x) mu_x == total.
struct GraphEnergy {
  double total = 0.0;
  EnergyDensityField field;
};
GraphEnergy graphDirichletEnergy(const MapState& map);

// Refinement study comparing the ball-averaged density against the graph
// density on a fixed interior chart ball B (radius `interiorRadius`), one row
// per mesh level.
struct DensityStudyConfig {
  double p = 2.0;
  std::vector<double> epsilons;  // one per level, decreasing, >= 4h each
  double interiorRadius = 0.25;
};
struct DensityStudyRow {
  int level = 0;
  double epsilon = 0.0;
  double spacing = 0.0;
  // Integral over B of |ball-averaged density - graph density|.
  double l1Gap = 0.0;
  // Integral over B of the graph density (normalizes the gap).
  double interiorEnergy = 0.0;
  // Ratio ball-averaged / graph density over B: measure-weighted mean and
  // range (vertices with vanishing graph density are skipped; all three are
  // 1 when none qualify).  The graph density fluctuates vertex-to-vertex
  // with the stencil geometry, so the mean is the convergence statistic and
  // the range is diagnostic.
  double ratioMean = 1.0;
  double ratioLow = 1.0;
  double ratioHigh = 1.0;
};
std::vector<DensityStudyRow> densityConvergenceStudy(
    const std::vector<const DomainMesh*>& levels,
    const std::function<MapState(const DomainMesh&)>& mapBuilder,
    const DensityStudyConfig& config);

// Scale-free constant of the energy lower bound for pair separation:
//   C = [sum_{x,y in B_z(r)} d^2(u x, u y) mu_x mu_y]
//       / [r^{n+2} * sum_{v in B_z(6r)} e_graph(v) mu_v].
// Returns 0 for maps with zero numerator; zero denominator with a nonzero
// numerator is impossible for graph energy and raises an inconsistency.
double poincareResidual(const MapState& map, const ConePoint& center,
                        double r);

}  // namespace harmlab
