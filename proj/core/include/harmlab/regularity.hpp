#pragma once

#include <cstdint>
#include <vector>

#include "harmlab/energy.hpp"
#include "harmlab/mesh.hpp"
#include "harmlab/target.hpp"

namespace harmlab {

// Pointwise Lipschitz estimate at one vertex: for each probe radius r, the
// supremum of d_Y(u(x), u(y)) / |xy| over mesh vertices y with |xy| <= r.
// The finite-radius profile stands in for the shrinking-radius limit; the
// entry at the smallest radius is the headline estimate.
struct LipschitzProfile {
  std::vector<double> radii;   // decreasing
  std::vector<double> values;  // sup ratio at each radius
  double lipschitz = 0.0;      // value at the smallest radius
};
LipschitzProfile pointwiseLipschitz(const MapState& map, int x,
                                    std::vector<double> radii);

// Least-squares slope of log(oscillation over B_center(r)) against log r.
struct HolderFit {
  double exponent = 0.0;
  double rmsResidual = 0.0;  // fit residual in log-oscillation units
  bool defined = false;      // false when the oscillations vanish
};
HolderFit holderExponentFit(const MapState& map, const ConePoint& center,
                            const std::vector<double>& radii);

// Scale-free regularity ratio over a ball pair: numerator
//   sup { d_Y(u(x),u(y)) / |xy| : x, y in closed B_q(R/16), |xy| >= 2h },
// denominator sqrt(energy mean over B_q(R)) + oscillation over B_q(R).
// Bounded under refinement on domains with curvature bounded below; grows
// without bound at a cone apex of total angle > 2 pi.
struct LipschitzReport {
  double supPairRatio = 0.0;  // numerator
  double energyMean = 0.0;    // graph energy per unit measure over B_q(R)
  double oscillation = 0.0;   // over B_q(R)
  double ratio = 0.0;         // numerator / (sqrt(energyMean) + oscillation)
  int pairCount = 0;
};
LipschitzReport mainTheoremRatio(const MapState& map, const ConePoint& q,
                                 double R);

// Fitted constant of the pointwise bound Lip^2 u <= C * density: the
// supremum of Lip(x)^2 / e_graph(x) over vertices of B_q(R), with Lip taken
// at the given probe radius.  A diagnostic constant, compared only across
// refinements, never against an absolute value.
double lipschitzDensityConstant(const MapState& map, const ConePoint& q,
                                double R, double probeRadius);

// Discrete sub-harmonicity checks on a solved map:
//  (a) pair check: (L (+) L) f >= -pairTolerance at seeded interior vertex
//      pairs, f(x,y) = d_Y(u(x), u(y)), L (+) L the Kronecker-sum Laplacian;
//  (b) probe check: L(f_P^2) >= 2 e_graph mu - c h Lip_loc^2 mu at interior
//      vertices, f_P = d_Y(u(.), P), Lip_loc the one-ring difference
//      quotient maximum.
struct CompositionOptions {
  int pairSamples = 4000;
  std::uint64_t seed = 1;
  double pairTolerance = 1e-6;
  double toleranceConstant = 1.0;  // the c of the probe tolerance
  // Absolute floor added to the scaled probe tolerance so that rounding
  // noise on exactly harmonic maps is never counted as a violation.
  double probeTolerance = 1e-9;
  // Stale-map guard: largest admissible single-vertex barycenter
  // displacement before the check refuses to run.
  double staleTolerance = 1e-6;
};
struct CompositionResiduals {
  int pairSamples = 0;
  int pairViolations = 0;
  double worstPairResidual = 0.0;  // min of (L (+) L) f over the samples
  int probeChecks = 0;
  int probeViolations = 0;
  double worstProbeMargin = 0.0;   // min of L(f_P^2) - 2 e mu + tol over checks
  // Smallest c that would clear every probe check (fitted, reported).
  double fittedToleranceConstant = 0.0;
};
CompositionResiduals compositionResiduals(
    const MapState& map, const std::vector<TargetPoint>& probes,
    const CompositionOptions& options = {});

// Scalar mean-value residuals at vertex p for each radius R:
//   [annulus average of f over the sphere of radius R] - f(p)
//     - h(p) R^2 / (2n),
// the annulus being one mesh spacing wide with measure-weighted averaging.
// Nonpositive up to discretization for super-solutions of L f = h mu; near
// zero for the equality cases.  Radii below two mesh spacings are refused.
std::vector<double> scalarMeanValueResiduals(const DomainMesh& mesh,
                                             const std::vector<double>& f,
                                             const std::vector<double>& h,
                                             int p,
                                             const std::vector<double>& radii);

// Map-space mean-value residuals at vertex p for each radius R:
//   sum over the ball B_p(R) of [d^2(P, u(p)) - d^2(P, u(y))] mu_y
//     + e_graph(p) * omega_{n-1} / (n (n+2)) * R^{n+2},
// expected below a o(R^{n+2}) tolerance on solved maps.
std::vector<double> mapMeanValueResiduals(const MapState& map,
                                          const TargetPoint& probe, int p,
                                          const std::vector<double>& radii);

}  // namespace harmlab
