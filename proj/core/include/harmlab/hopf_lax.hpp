#pragma once

#include <cstddef>
#include <vector>

#include "harmlab/energy.hpp"
#include "harmlab/mesh.hpp"

namespace harmlab {

// Inf-convolution field derived from a map u: for a time parameter t and a
// family parameter lambda in [0, 1],
//
//   f(x, lambda) = min over y in the search set of
//       exp(-2 n k lambda) |xy|^2 / (2 t)  -  d_Y(u(x), u(y)),
//
// evaluated for every x of an evaluation set compactly contained in the
// search set.  k is the mesh's lower curvature bound, n its dimension.
// Alongside the value the computation records the set of near-minimizers
// (within a value tolerance) and the distance to that set.

struct HopfLaxConfig {
  double t = 0.0;
  std::vector<double> lambdaGrid;  // strictly increasing, within [0, 1]
  std::vector<int> inner;          // evaluation vertices
  std::vector<int> outer;          // search vertices, a superset of inner
  // Near-minimizer band width; negative means the default
  // 1e-9 + h * Lip(integrand).
  double argminTolerance = -1.0;
};

struct HopfLaxField {
  const DomainMesh* domain = nullptr;
  double t = 0.0;
  std::vector<double> lambdaGrid;
  std::vector<int> inner;  // row order of the tables below
  std::vector<int> outer;

  // Row-major tables over (inner index, lambda index).
  std::vector<double> values;          // f(x, lambda), always <= 0
  std::vector<double> argminDistance;  // distance from x to the argmin band
  std::vector<std::vector<int>> argminSets;  // ascending vertex order

  // Derived constants.
  double oscillation = 0.0;  // of the map over the search set
  double cStar = 0.0;        // 2 * oscillation + 2
  double separation = 0.0;   // distance from inner to the search-set rim
  double horizon = 0.0;      // separation^2 / (4 cStar); requires t < horizon
  double curvature = 0.0;    // k
  double argminTolerance = 0.0;
  double integrandLipschitz = 0.0;

  std::size_t cell(std::size_t row, std::size_t col) const {
    return row * lambdaGrid.size() + col;
  }
  double value(std::size_t row, std::size_t col) const {
    return values[cell(row, col)];
  }
  double distance(std::size_t row, std::size_t col) const {
    return argminDistance[cell(row, col)];
  }
};

HopfLaxField computeHopfLax(const MapState& map, const HopfLaxConfig& config);

// Residuals of the field's structural bounds:
//  (a) 0 >= f >= -oscillation;
//  (b) |f(x,a) - f(x,b)| <= exp(-2nk) cStar |a - b| over all grid pairs;
//  (c) argmin distance <= sqrt(cStar t) + h;
//  (d) forward differences: for consecutive grid points a < b,
//        (f(x,b) - f(x,a)) / (b - a) + exp(-2nka) (nk/t) L(x,a)^2
//      >= -cStar (b - a).
// The grid spacing must not exceed 0.05.
struct HopfLaxReport {
  int cells = 0;
  int rangeViolations = 0;
  double lowestValue = 0.0;
  double highestValue = 0.0;
  int lambdaLipschitzViolations = 0;
  double worstLambdaLipschitzExcess = 0.0;  // <= 0 when the bound holds
  int distanceBoundViolations = 0;
  double worstDistanceExcess = 0.0;  // <= 0 when the bound holds
  int derivativeViolations = 0;
  double worstDerivativeMargin = 0.0;  // >= 0 when the bound holds
  double derivativeTolerance = 0.0;    // cStar * (largest grid step)
};
HopfLaxReport hopfLaxPropertyResiduals(const HopfLaxField& field,
                                       const MapState& map);

// Weighted-Laplacian test of the one-lambda slice f(., lambda):
//   L f(x) <= [-exp(-2nk lambda) (nk/t) L(x)^2] mu_x + c h Lip_loc(f)
// at every evaluation vertex whose graph neighbors all lie in the
// evaluation set; the others are excluded and counted.
struct SupersolutionReport {
  std::vector<int> vertices;
  std::vector<double> gaps;        // lhs - rhs, violation when > tolerance
  std::vector<double> tolerances;  // c h Lip_loc(f) per vertex
  int excluded = 0;
  int violations = 0;
  double toleranceConstant = 1.0;
  double fittedConstant = 0.0;  // smallest c that would clear every gap
};
SupersolutionReport supersolutionResidual(const HopfLaxField& field,
                                          std::size_t lambdaIndex,
                                          double toleranceConstant = 1.0);

// Forward differences in t of v = -f at probe vertices against the bound
//   [v(t+s) - v(t)] / s  <=  Lip^2 u(x) + sup_{y in B_x(4h)} ((v(y)-v(x))_+ / 4h)^2,
// the pointwise Lipschitz value taken at radius 4h as well.
struct TimeDerivativeProfile {
  std::vector<int> vertices;
  std::vector<double> sValues;              // decreasing
  std::vector<double> forwardDifferences;   // row-major (probe, s)
  std::vector<double> bounds;               // per probe
  std::vector<double> residuals;            // forwardDifference - bound
  std::size_t cell(std::size_t probe, std::size_t s) const {
    return probe * sValues.size() + s;
  }
};
TimeDerivativeProfile timeDerivativeResidual(const MapState& map,
                                             const HopfLaxConfig& config,
                                             const std::vector<int>& probes,
                                             std::size_t lambdaIndex,
                                             const std::vector<double>& sList);

}  // namespace harmlab
