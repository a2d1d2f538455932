#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "harmlab/error.hpp"

namespace harmlab {

// Point of a Euclidean target R^m.
struct EuclideanPoint {
  std::vector<double> x;
};

// Point of the hyperbolic plane in the hyperboloid model: x0^2-x1^2-x2^2 = 1,
// x0 > 0.  Stored coordinates satisfy the constraint to ~1e-10 after every
// operation.
struct HyperbolicPoint {
  std::array<double, 3> x{1.0, 0.0, 0.0};
};

// Point of a metric tree, addressed as an edge id plus arclength offset from
// that edge's first endpoint (offset in [0, edge length]).
struct TreePoint {
  int edge = 0;
  double offset = 0.0;
};

using TargetPoint = std::variant<EuclideanPoint, HyperbolicPoint, TreePoint>;

// Finite weighted metric tree.  Node ids are 0..nodeCount-1; edges carry
// positive lengths.  finalize() validates tree topology and precomputes
// all-pairs node distances and next-hop routing.
struct MetricTree {
  struct TreeEdge {
    int a = 0, b = 0;
    double length = 1.0;
  };
  int nodeCount = 0;
  std::vector<TreeEdge> edges;

  // Derived tables (finalize()).
  std::vector<double> nodeDistanceTable;  // nodeCount x nodeCount
  std::vector<int> nextHopTable;          // next node on the path a -> b

  void finalize();
  double nodeDistance(int a, int b) const {
    return nodeDistanceTable[a * nodeCount + b];
  }
  int nextHop(int a, int b) const { return nextHopTable[a * nodeCount + b]; }

  // Three legs of the given lengths joined at node 0 (tips are nodes 1..3).
  static MetricTree tripod(double leg1 = 1.0, double leg2 = 1.0,
                           double leg3 = 1.0);
};

// A nonpositively curved target space: Euclidean R^m, the hyperbolic plane,
// or a metric tree.  All metric operations (distance, geodesic interpolation,
// weighted barycenters, the four-point comparison residual) run through this
// interface.
class NpcTarget {
 public:
  enum class Kind { Euclidean, Hyperbolic, Tree };

  static NpcTarget euclidean(int dim);
  static NpcTarget hyperbolicPlane();
  static NpcTarget tree(MetricTree tree);

  Kind kind() const { return kind_; }
  int euclideanDim() const { return dim_; }
  const MetricTree& treeData() const;

  // Type/constraint validation of a point against this target.
  void validate(const TargetPoint& p) const;

  double distance(const TargetPoint& p, const TargetPoint& q) const;

  // Point at parameter s in [0, 1] along the unique geodesic from p to q.
  TargetPoint geodesicPoint(const TargetPoint& p, const TargetPoint& q,
                            double s) const;

  // Minimizer of sum_i w_i d^2(q, p_i) (weights nonnegative, positive sum).
  // Deterministic; the displacement of the final inner iteration is below
  // `tol` (closed-form cases are exact).
  TargetPoint weightedBarycenter(const std::vector<TargetPoint>& points,
                                 const std::vector<double>& weights,
                                 double tol = 1e-10) const;

  // Residual of the four-point comparison inequality with the midpoint of
  // [q, r]; nonnegative (up to roundoff) in any NPC space.
  double quadrupleResidual(const TargetPoint& p, const TargetPoint& q,
                           const TargetPoint& r, const TargetPoint& s) const;

  // Largest pairwise distance of `points`.  Exact: linear-time sweeps for
  // R^1 and trees, quadratic pair scan otherwise.
  double oscillation(const std::vector<TargetPoint>& points) const;

  // Uniformly seeded sample point (for randomized sweeps and probes).
  TargetPoint samplePoint(std::uint64_t& rngState) const;

  // Canonical point of a tree node (offset 0 or full length on the lowest
  // indexed incident edge).
  TreePoint nodePoint(int node) const;

  // Default target: the real line (euclidean dimension 1).
  NpcTarget() = default;

 private:
  Kind kind_ = Kind::Euclidean;
  int dim_ = 1;
  MetricTree tree_;
};

// Convenience wrappers for scalar (R^1) targets.
TargetPoint scalarPoint(double v);
double scalarValue(const TargetPoint& p);

}  // namespace harmlab
