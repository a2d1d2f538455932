#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "harmlab/energy.hpp"
#include "harmlab/hopf_lax.hpp"
#include "harmlab/mesh.hpp"
#include "harmlab/solver.hpp"
#include "harmlab/target.hpp"

namespace {

using namespace harmlab;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const DomainMesh& diskMesh(int level) {
  static std::vector<DomainMesh> meshes = [] {
    std::vector<DomainMesh> out;
    for (int l = 0; l < 4; ++l) {
      out.push_back(buildConeMesh(ConeSpec{kTwoPi, 1.0, l, 8}));
    }
    return out;
  }();
  return meshes[static_cast<std::size_t>(level)];
}

void BM_ConeDistance(benchmark::State& state) {
  const ConePoint a{0.7, 1.1};
  const ConePoint b{0.4, 5.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(coneDistance(3.0 * std::numbers::pi, a, b));
  }
}
BENCHMARK(BM_ConeDistance);

void BM_BuildConeMesh(benchmark::State& state) {
  const ConeSpec spec{kTwoPi, 1.0, static_cast<int>(state.range(0)), 8};
  for (auto _ : state) {
    benchmark::DoNotOptimize(buildConeMesh(spec).vertexCount());
  }
}
BENCHMARK(BM_BuildConeMesh)->Arg(1)->Arg(2)->Arg(3);

void BM_MetricBall(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        metricBall(mesh, ConePoint{0.3, 1.0}, 0.25).vertices.size());
  }
}
BENCHMARK(BM_MetricBall)->Arg(1)->Arg(2)->Arg(3);

void BM_TripodBarycenter(benchmark::State& state) {
  const NpcTarget target = NpcTarget::tree(MetricTree::tripod());
  const std::vector<TargetPoint> points = {
      TreePoint{0, 0.8}, TreePoint{1, 0.5}, TreePoint{2, 0.6},
      TreePoint{0, 0.1}};
  const std::vector<double> weights = {1.0, 2.0, 1.5, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(target.weightedBarycenter(points, weights));
  }
}
BENCHMARK(BM_TripodBarycenter);

void BM_HyperbolicBarycenter(benchmark::State& state) {
  const NpcTarget target = NpcTarget::hyperbolicPlane();
  std::uint64_t rng = 5;
  std::vector<TargetPoint> points;
  for (int i = 0; i < 4; ++i) points.push_back(target.samplePoint(rng));
  const std::vector<double> weights = {1.0, 2.0, 1.5, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(target.weightedBarycenter(points, weights));
  }
}
BENCHMARK(BM_HyperbolicBarycenter);

void BM_GraphEnergy(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(static_cast<int>(state.range(0)));
  const MapState map = makeScalarMap(
      mesh, [](const ConePoint& p) { return p.r * std::cos(p.phi); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(graphDirichletEnergy(map).total);
  }
}
BENCHMARK(BM_GraphEnergy)->Arg(1)->Arg(2)->Arg(3);

void BM_BallAveragedDensity(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(2);
  const MapState map = makeScalarMap(
      mesh, [](const ConePoint& p) { return p.r * std::cos(p.phi); });
  const double eps = 8.0 * mesh.cone->spacing();
  const int v = nearestVertex(mesh, ConePoint{0.3, 1.0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(approxEnergyDensity(map, 2.0, eps, v));
  }
}
BENCHMARK(BM_BallAveragedDensity);

void BM_GaussSeidelSweepScalar(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(static_cast<int>(state.range(0)));
  // One full solve per iteration at a loose tolerance: dominated by sweeps.
  for (auto _ : state) {
    const DirichletSolution solution = solveDirichlet(
        makeScalarDirichletProblem(
            mesh, [](const ConePoint& p) { return std::cos(p.phi); }),
        SolverOptions{1e-3, 100000, false, false});
    benchmark::DoNotOptimize(solution.report.iterations);
  }
}
BENCHMARK(BM_GaussSeidelSweepScalar)->Arg(1)->Arg(2);

void BM_ScalarPoisson(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(static_cast<int>(state.range(0)));
  const int V = mesh.vertexCount();
  std::vector<double> g(static_cast<std::size_t>(V), 0.0);
  for (int v = 0; v < V; ++v) {
    if (mesh.boundaryFlags[v]) g[v] = std::cos(mesh.vertices[v].phi);
  }
  const std::vector<double> zero(static_cast<std::size_t>(V), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solveScalarPoisson(mesh, zero, g).front());
  }
}
BENCHMARK(BM_ScalarPoisson)->Arg(2)->Arg(3);

void BM_HopfLaxField(benchmark::State& state) {
  const DomainMesh& mesh = diskMesh(2);
  const MapState map = makeScalarMap(
      mesh, [](const ConePoint& p) { return p.r * std::cos(p.phi); });
  HopfLaxConfig config;
  for (int j = 0; j <= 10; ++j) config.lambdaGrid.push_back(j / 10.0);
  config.inner = metricBall(mesh, ConePoint{0.0, 0.0}, 0.3).vertices;
  config.outer = metricBall(mesh, ConePoint{0.0, 0.0}, 0.95).vertices;
  config.t = 1e-6;
  config.t = 0.25 * computeHopfLax(map, config).horizon;
  for (auto _ : state) {
    benchmark::DoNotOptimize(computeHopfLax(map, config).values.front());
  }
}
BENCHMARK(BM_HopfLaxField);

}  // namespace

BENCHMARK_MAIN();
