#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "harmlab/energy.hpp"
#include "harmlab/mesh.hpp"
#include "harmlab/target.hpp"

namespace harmlab {

// Dirichlet problem for an energy-minimizing map: boundary vertices carry
// prescribed target values, interior values are free.
struct DirichletProblem {
  // How interior values are seeded before the first sweep.
  enum class Init {
    BoundaryBarycenter,  // single barycenter of all boundary data (default;
                         // stays inside the convex hull of the data)
    Warm,                // caller-provided full value vector
    Random,              // independent target samples from `seed`
  };

  const DomainMesh* domain = nullptr;
  NpcTarget target;
  // Full-length value vector; only boundary entries are read.
  std::vector<TargetPoint> boundaryValues;
  Init init = Init::BoundaryBarycenter;
  std::vector<TargetPoint> warmStart;
  std::uint64_t seed = 1;

  void validate() const;
};

// Convenience constructors from chart-coordinate boundary expressions.
DirichletProblem makeDirichletProblem(
    const DomainMesh& mesh, const NpcTarget& target,
    const std::function<TargetPoint(const ConePoint&)>& boundary);
DirichletProblem makeScalarDirichletProblem(
    const DomainMesh& mesh, const std::function<double(const ConePoint&)>& g);

struct SolverOptions {
  double tolerance = 1e-9;   // target-distance units, certified final error
  int maxIterations = 100000;
  // Jacobi sweeps update every vertex from the previous iterate (barrier per
  // sweep); energy monotonicity is only guaranteed for Gauss-Seidel.
  bool jacobi = false;
  bool recordEnergyTrace = true;
};

struct SolverReport {
  int iterations = 0;
  std::vector<double> energyTrace;  // total graph energy after each sweep
  // Max vertex move per sweep, aligned with energyTrace.
  std::vector<double> displacementTrace;
  double finalDisplacement = 0.0;   // max vertex move in the last sweep
  double estimatedContraction = 0.0;
  bool converged = false;
};

struct DirichletSolution {
  MapState map;
  SolverReport report;
};

// Barycenter iteration: every sweep replaces each interior value by the
// weighted barycenter of its neighbors (weights = Laplacian couplings).
// Stops when the estimated remaining error, extrapolated geometrically from
// the displacement contraction, drops below the tolerance.  Exceeding
// maxIterations returns the best iterate with converged=false.
DirichletSolution solveDirichlet(const DirichletProblem& problem,
                                 const SolverOptions& options = {});

// Scalar Poisson problem L f = mu * h at interior vertices, f = g on the
// boundary (L the weighted graph Laplacian, the discrete distributional
// Laplacian).  Conjugate gradients on the interior system with an
// incomplete-Cholesky preconditioner, direct-factorization fallback; the
// returned field satisfies the equations to 1e-10 in the max norm.
std::vector<double> solveScalarPoisson(const DomainMesh& mesh,
                                       const std::vector<double>& h,
                                       const std::vector<double>& g);

// Minimum-principle probe: for the closed vertex set `subdomain` S, its rim
// consists of the members with a neighbor outside S or on the mesh boundary.
// Returns min over the rim minus min over the rest of S; nonpositive for
// discretely superharmonic fields (L f <= 0 inside S).
double maximumPrincipleResidual(const DomainMesh& mesh,
                                const std::vector<double>& f,
                                const std::vector<int>& subdomain);

}  // namespace harmlab
