#include "harmlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "harmlab/error.hpp"

namespace harmlab {

void DirichletProblem::validate() const {
  require(domain != nullptr, ErrorKind::InvalidSpec, "problem has no domain");
  const int V = domain->vertexCount();
  require(static_cast<int>(boundaryValues.size()) == V,
          ErrorKind::Inconsistency,
          "boundary data must be a full-length value vector");
  int boundaryCount = 0;
  for (int v = 0; v < V; ++v) {
    if (!domain->boundaryFlags[v]) continue;
    target.validate(boundaryValues[v]);
    ++boundaryCount;
  }
  require(boundaryCount > 0, ErrorKind::Topology,
          "problem needs at least one boundary vertex");
  if (init == Init::Warm) {
    require(static_cast<int>(warmStart.size()) == V, ErrorKind::Inconsistency,
            "warm start must cover every vertex");
    for (const TargetPoint& p : warmStart) target.validate(p);
  }
}

DirichletProblem makeDirichletProblem(
    const DomainMesh& mesh, const NpcTarget& target,
    const std::function<TargetPoint(const ConePoint&)>& boundary) {
  DirichletProblem problem;
  problem.domain = &mesh;
  problem.target = target;
  problem.boundaryValues.resize(mesh.vertexCount());
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    if (mesh.boundaryFlags[v]) {
      problem.boundaryValues[v] = boundary(mesh.vertices[v]);
    }
  }
  problem.validate();
  return problem;
}

DirichletProblem makeScalarDirichletProblem(
    const DomainMesh& mesh, const std::function<double(const ConePoint&)>& g) {
  return makeDirichletProblem(
      mesh, NpcTarget::euclidean(1),
      [&](const ConePoint& p) { return scalarPoint(g(p)); });
}

namespace {

std::vector<TargetPoint> initialValues(const DirichletProblem& problem) {
  const DomainMesh& mesh = *problem.domain;
  const int V = mesh.vertexCount();
  std::vector<TargetPoint> values(V);
  for (int v = 0; v < V; ++v) {
    if (mesh.boundaryFlags[v]) values[v] = problem.boundaryValues[v];
  }
  switch (problem.init) {
    case DirichletProblem::Init::BoundaryBarycenter: {
      std::vector<TargetPoint> data;
      for (int v = 0; v < V; ++v) {
        if (mesh.boundaryFlags[v]) data.push_back(problem.boundaryValues[v]);
      }
      const TargetPoint seed = problem.target.weightedBarycenter(
          data, std::vector<double>(data.size(), 1.0), 1e-12);
      for (int v = 0; v < V; ++v) {
        if (!mesh.boundaryFlags[v]) values[v] = seed;
      }
      break;
    }
    case DirichletProblem::Init::Warm:
      for (int v = 0; v < V; ++v) {
        if (!mesh.boundaryFlags[v]) values[v] = problem.warmStart[v];
      }
      break;
    case DirichletProblem::Init::Random: {
      std::uint64_t state = problem.seed;
      for (int v = 0; v < V; ++v) {
        if (!mesh.boundaryFlags[v]) {
          values[v] = problem.target.samplePoint(state);
        }
      }
      break;
    }
  }
  return values;
}

// Certified geometric-extrapolation stop: once the sweep displacement
// contracts steadily with factor rho, the distance to the fixed point is at
// most disp * rho / (1 - rho).
class StoppingRule {
 public:
  explicit StoppingRule(double tol) : tol_(tol) {}

  bool done(double displacement, double* contraction) {
    const double previous = last_;
    last_ = displacement;
    if (displacement <= 1e-3 * tol_) {  // numerical stagnation
      *contraction = 0.0;
      return true;
    }
    if (previous <= 0.0) return false;
    const double ratio = displacement / previous;
    ratios_[cursor_++ % 3] = ratio;
    if (cursor_ < 3) return false;
    const double rho = std::max({ratios_[0], ratios_[1], ratios_[2]});
    if (rho >= 1.0) return false;
    *contraction = rho;
    return displacement * rho / (1.0 - rho) <= tol_;
  }

 private:
  double tol_;
  double last_ = -1.0;
  double ratios_[3] = {0.0, 0.0, 0.0};
  int cursor_ = 0;
};

}  // namespace

DirichletSolution solveDirichlet(const DirichletProblem& problem,
                                 const SolverOptions& options) {
  problem.validate();
  require(options.tolerance > 0.0, ErrorKind::Parameter,
          "solver tolerance must be positive");
  require(options.maxIterations > 0, ErrorKind::Parameter,
          "solver iteration cap must be positive");
  const DomainMesh& mesh = *problem.domain;
  const NpcTarget& target = problem.target;
  const int V = mesh.vertexCount();

  std::vector<int> interior;
  for (int v = 0; v < V; ++v) {
    if (!mesh.boundaryFlags[v]) interior.push_back(v);
  }
  for (int v : interior) {
    double total = 0.0;
    for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
         ++a) {
      total += mesh.edges[mesh.adjacency[a].edge].weight;
    }
    require(total > 0.0, ErrorKind::Topology,
            "interior vertex with no coupling to its neighbors");
  }

  std::vector<TargetPoint> values = initialValues(problem);

  // Flat-coordinate fast path for linear targets.
  const bool euclidean = target.kind() == NpcTarget::Kind::Euclidean;
  const int dim = euclidean ? target.euclideanDim() : 0;
  std::vector<double> flat;
  if (euclidean) {
    flat.resize(static_cast<std::size_t>(V) * dim);
    for (int v = 0; v < V; ++v) {
      const auto& x = std::get<EuclideanPoint>(values[v]).x;
      for (int d = 0; d < dim; ++d) flat[static_cast<std::size_t>(v) * dim + d] = x[d];
    }
  }

  auto edgeEnergy = [&]() {
    double total = 0.0;
    if (euclidean) {
      for (const DomainMesh::Edge& e : mesh.edges) {
        double d2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double diff = flat[static_cast<std::size_t>(e.i) * dim + d] -
                              flat[static_cast<std::size_t>(e.j) * dim + d];
          d2 += diff * diff;
        }
        total += e.weight * d2;
      }
    } else {
      for (const DomainMesh::Edge& e : mesh.edges) {
        const double d = target.distance(values[e.i], values[e.j]);
        total += e.weight * d * d;
      }
    }
    return total;
  };

  SolverReport report;
  StoppingRule stop(options.tolerance);
  const double barycenterTol = std::min(1e-12, options.tolerance * 1e-3);

  std::vector<double> flatNext;       // Jacobi double-buffer
  std::vector<TargetPoint> valuesNext;
  if (options.jacobi) {
    if (euclidean) flatNext = flat;
    else valuesNext = values;
  }
  std::vector<TargetPoint> neighborPoints;
  std::vector<double> neighborWeights;
  std::vector<double> acc(euclidean ? dim : 0);

  for (int sweep = 0; sweep < options.maxIterations; ++sweep) {
    double displacement = 0.0;
    if (euclidean) {
      std::vector<double>& out = options.jacobi ? flatNext : flat;
      for (int v : interior) {
        double wsum = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int a = mesh.adjacencyOffsets[v];
             a < mesh.adjacencyOffsets[v + 1]; ++a) {
          const auto& nb = mesh.adjacency[a];
          const double w = mesh.edges[nb.edge].weight;
          if (w == 0.0) continue;
          wsum += w;
          const std::size_t base = static_cast<std::size_t>(nb.vertex) * dim;
          for (int d = 0; d < dim; ++d) acc[d] += w * flat[base + d];
        }
        const std::size_t base = static_cast<std::size_t>(v) * dim;
        double move2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double next = acc[d] / wsum;
          const double diff = next - flat[base + d];
          move2 += diff * diff;
          out[base + d] = next;
        }
        displacement = std::max(displacement, std::sqrt(move2));
      }
      if (options.jacobi) flat.swap(flatNext);
    } else {
      std::vector<TargetPoint>& out = options.jacobi ? valuesNext : values;
      for (int v : interior) {
        neighborPoints.clear();
        neighborWeights.clear();
        for (int a = mesh.adjacencyOffsets[v];
             a < mesh.adjacencyOffsets[v + 1]; ++a) {
          const auto& nb = mesh.adjacency[a];
          const double w = mesh.edges[nb.edge].weight;
          if (w == 0.0) continue;
          neighborPoints.push_back(values[nb.vertex]);
          neighborWeights.push_back(w);
        }
        TargetPoint next = target.weightedBarycenter(
            neighborPoints, neighborWeights, barycenterTol);
        displacement =
            std::max(displacement, target.distance(values[v], next));
        out[v] = std::move(next);
      }
      if (options.jacobi) values.swap(valuesNext);
    }

    ++report.iterations;
    report.finalDisplacement = displacement;
    if (options.recordEnergyTrace) {
      report.energyTrace.push_back(edgeEnergy());
      report.displacementTrace.push_back(displacement);
    }
    if (stop.done(displacement, &report.estimatedContraction)) {
      report.converged = true;
      break;
    }
  }

  if (euclidean) {
    for (int v : interior) {
      EuclideanPoint p;
      p.x.assign(flat.begin() + static_cast<std::size_t>(v) * dim,
                 flat.begin() + static_cast<std::size_t>(v) * dim + dim);
      values[v] = std::move(p);
    }
  }

  DirichletSolution solution{MapState(mesh, target, std::move(values)),
                             std::move(report)};
  return solution;
}

std::vector<double> solveScalarPoisson(const DomainMesh& mesh,
                                       const std::vector<double>& h,
                                       const std::vector<double>& g) {
  const int V = mesh.vertexCount();
  require(static_cast<int>(h.size()) == V, ErrorKind::Inconsistency,
          "source field must cover every vertex");
  require(static_cast<int>(g.size()) == V, ErrorKind::Inconsistency,
          "boundary data must be a full-length value vector");

  // Every vertex must reach the boundary, else the interior block is
  // singular.
  std::vector<char> reached(V, 0);
  std::queue<int> frontier;
  for (int v = 0; v < V; ++v) {
    if (mesh.boundaryFlags[v]) {
      reached[v] = 1;
      frontier.push(v);
    }
  }
  require(!frontier.empty(), ErrorKind::Topology,
          "Poisson problem needs boundary vertices");
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
         ++a) {
      const int y = mesh.adjacency[a].vertex;
      if (!reached[y]) {
        reached[y] = 1;
        frontier.push(y);
      }
    }
  }
  for (int v = 0; v < V; ++v) {
    require(reached[v], ErrorKind::Topology,
            "interior component with no boundary contact");
  }

  std::vector<int> index(V, -1);
  std::vector<int> interior;
  for (int v = 0; v < V; ++v) {
    if (!mesh.boundaryFlags[v]) {
      index[v] = static_cast<int>(interior.size());
      interior.push_back(v);
    }
  }
  const int N = static_cast<int>(interior.size());

  std::vector<double> f(g);
  if (N == 0) return f;

  // SPD interior system: (sum_y w) f_x - sum_{y interior} w f_y
  //                      = -mu_x h_x + sum_{y boundary} w g_y.
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs(N);
  for (int k = 0; k < N; ++k) {
    const int v = interior[k];
    double diag = 0.0;
    double b = -mesh.measures[v] * h[v];
    for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
         ++a) {
      const auto& nb = mesh.adjacency[a];
      const double w = mesh.edges[nb.edge].weight;
      diag += w;
      if (index[nb.vertex] >= 0) {
        triplets.emplace_back(k, index[nb.vertex], -w);
      } else {
        b += w * g[nb.vertex];
      }
    }
    triplets.emplace_back(k, k, diag);
    rhs(k) = b;
  }
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(triplets.begin(), triplets.end());

  auto assign = [&](const Eigen::VectorXd& x) {
    for (int k = 0; k < N; ++k) f[interior[k]] = x(k);
  };
  auto residual = [&]() {
    double worst = 0.0;
    for (int v : interior) {
      double lf = 0.0;
      for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
           ++a) {
        const auto& nb = mesh.adjacency[a];
        lf += mesh.edges[nb.edge].weight * (f[nb.vertex] - f[v]);
      }
      worst = std::max(worst, std::abs(lf - mesh.measures[v] * h[v]));
    }
    return worst;
  };

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(20L * N + 1000);
  cg.compute(A);
  if (cg.info() == Eigen::Success) {
    assign(cg.solve(rhs));
    if (residual() <= 1e-10) return f;
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(A);
  require(ldlt.info() == Eigen::Success, ErrorKind::Topology,
          "Poisson system factorization failed");
  assign(ldlt.solve(rhs));
  require(residual() <= 1e-10, ErrorKind::Inconsistency,
          "Poisson solve missed its residual bound");
  return f;
}

double maximumPrincipleResidual(const DomainMesh& mesh,
                                const std::vector<double>& f,
                                const std::vector<int>& subdomain) {
  require(!subdomain.empty(), ErrorKind::Config,
          "minimum-principle probe needs a nonempty subdomain");
  require(static_cast<int>(f.size()) == mesh.vertexCount(),
          ErrorKind::Inconsistency, "field must cover every vertex");
  std::vector<char> inSet(mesh.vertexCount(), 0);
  for (int v : subdomain) {
    require(v >= 0 && v < mesh.vertexCount(), ErrorKind::OutOfDomain,
            "subdomain vertex out of range");
    inSet[v] = 1;
  }
  double rimMin = std::numeric_limits<double>::infinity();
  double innerMin = std::numeric_limits<double>::infinity();
  bool hasRim = false, hasInner = false;
  for (int v : subdomain) {
    bool rim = mesh.boundaryFlags[v] != 0;
    for (int a = mesh.adjacencyOffsets[v];
         !rim && a < mesh.adjacencyOffsets[v + 1]; ++a) {
      rim = !inSet[mesh.adjacency[a].vertex];
    }
    if (rim) {
      rimMin = std::min(rimMin, f[v]);
      hasRim = true;
    } else {
      innerMin = std::min(innerMin, f[v]);
      hasInner = true;
    }
  }
  require(hasRim && hasInner, ErrorKind::Config,
          "subdomain needs both rim and interior vertices");
  return rimMin - innerMin;
}

}  // namespace harmlab
