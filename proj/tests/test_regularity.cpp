#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "harmlab/error.hpp"
#include "harmlab/regularity.hpp"
#include "harmlab/solver.hpp"

using namespace harmlab;

namespace {

constexpr double kPi = std::numbers::pi;

MapState linearMap(const DomainMesh& mesh, double ax, double ay) {
  return makeScalarMap(mesh, [=](const ConePoint& p) {
    return ax * p.r * std::cos(p.phi) + ay * p.r * std::sin(p.phi);
  });
}

// Separable harmonic profile r^beta cos(beta phi) for the cone whose total
// angle theta satisfies beta = 2 pi / theta.
MapState separableMap(const DomainMesh& mesh, double beta) {
  return makeScalarMap(mesh, [=](const ConePoint& p) {
    return std::pow(p.r, beta) * std::cos(beta * p.phi);
  });
}

}  // namespace

TEST_CASE("pointwise Lipschitz estimates") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});
  const double h = mesh.cone->spacing();

  const MapState flat =
      makeConstantMap(mesh, NpcTarget::euclidean(1), scalarPoint(4.0));
  const int x = nearestVertex(mesh, ConePoint{0.45, 1.3});
  CHECK(pointwiseLipschitz(flat, x, {8.0 * h, 4.0 * h}).lipschitz == 0.0);

  const MapState linear = linearMap(mesh, 0.6, -0.45);
  const double slope = std::hypot(0.6, 0.45);
  const LipschitzProfile profile =
      pointwiseLipschitz(linear, x, {8.0 * h, 6.0 * h, 4.0 * h});
  REQUIRE(profile.values.size() == 3);
  for (double value : profile.values) {
    CHECK(value == doctest::Approx(slope).epsilon(0.02));
  }
  CHECK(profile.lipschitz == profile.values.back());
  CHECK(profile.radii.front() > profile.radii.back());

  CHECK_THROWS_AS(pointwiseLipschitz(linear, x, {1e-9}), Error);
  CHECK_THROWS_AS(pointwiseLipschitz(linear, -1, {0.1}), Error);
  CHECK_THROWS_AS(pointwiseLipschitz(linear, x, {}), Error);
}

TEST_CASE("wide-cone profile has the predicted gradient magnitude") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, 3, 8});
  const double h = mesh.cone->spacing();
  const MapState map = separableMap(mesh, 2.0 / 3.0);
  const int x = nearestVertex(mesh, ConePoint{0.2, 0.7});
  const double expected = (2.0 / 3.0) * std::pow(0.2, -1.0 / 3.0);
  const LipschitzProfile profile =
      pointwiseLipschitz(map, x, {6.0 * h, 3.0 * h});
  CHECK(profile.lipschitz == doctest::Approx(expected).epsilon(0.1));
}

// Fit radii aligned with the radial rings: an open metric ball whose radius
// sits just past ring k has effective radius exactly k h, so the fitted
// slope is free of radius-quantization bias.
static std::vector<double> ringRadii(const DomainMesh& mesh) {
  const double h = mesh.cone->spacing();
  std::vector<double> radii;
  for (int k : {4, 6, 10, 16, 24}) {
    radii.push_back(k * h * (1.0 + 1e-9));
  }
  return radii;
}

TEST_CASE("oscillation exponents recover the separable profiles") {
  // Flat disk, boundary cos(phi): linear leading behavior, exponent 1.
  {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});
    const DirichletSolution solution = solveDirichlet(
        makeScalarDirichletProblem(
            mesh, [](const ConePoint& p) { return std::cos(p.phi); }),
        SolverOptions{1e-10, 100000, false, false});
    const HolderFit fit =
        holderExponentFit(solution.map, ConePoint{0.0, 0.0}, ringRadii(mesh));
    REQUIRE(fit.defined);
    CHECK(fit.exponent == doctest::Approx(1.0).epsilon(0.05));
  }

  // Wide cone, apex: exponent 2/3.
  {
    const DomainMesh mesh = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, 2, 8});
    const HolderFit fit = holderExponentFit(separableMap(mesh, 2.0 / 3.0),
                                            ConePoint{0.0, 0.0},
                                            ringRadii(mesh));
    REQUIRE(fit.defined);
    CHECK(fit.exponent == doctest::Approx(2.0 / 3.0).epsilon(0.105));
  }

  // Narrow cone (theta = pi), boundary cos(2 phi): exponent 2.
  {
    const DomainMesh mesh = buildConeMesh(ConeSpec{kPi, 1.0, 2, 8});
    const HolderFit fit = holderExponentFit(
        separableMap(mesh, 2.0), ConePoint{0.0, 0.0}, ringRadii(mesh));
    REQUIRE(fit.defined);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.05));
  }

  // Constant map: no oscillation to fit.
  {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 8});
    const HolderFit fit = holderExponentFit(
        makeConstantMap(mesh, NpcTarget::euclidean(1), scalarPoint(1.0)),
        ConePoint{0.0, 0.0}, ringRadii(mesh));
    CHECK(!fit.defined);
  }
}

TEST_CASE("regularity ratio: bounded for flat domains, divergent past 2 pi") {
  // Linear map on the disk: the ratio is refinement-stable.
  std::vector<double> flatRatios;
  for (int level : {1, 2, 3}) {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, level, 32});
    const LipschitzReport report =
        mainTheoremRatio(linearMap(mesh, 1.0, 0.4), ConePoint{0.0, 0.0}, 0.5);
    CHECK(report.pairCount > 0);
    flatRatios.push_back(report.ratio);
  }
  const auto [flatLo, flatHi] =
      std::minmax_element(flatRatios.begin(), flatRatios.end());
  CHECK(*flatHi < 2.0 * *flatLo);

  // 2/3-power profile at the wide-cone apex: the ratio grows by at least
  // 1.2x per refinement.
  std::vector<double> coneRatios;
  for (int level : {1, 2, 3}) {
    const DomainMesh mesh = buildConeMesh(ConeSpec{3.0 * kPi, 1.0, level, 32});
    const LipschitzReport report = mainTheoremRatio(
        separableMap(mesh, 2.0 / 3.0), ConePoint{0.0, 0.0}, 0.5);
    CHECK(report.pairCount > 0);
    coneRatios.push_back(report.ratio);
  }
  CHECK(coneRatios[1] >= 1.2 * coneRatios[0]);
  CHECK(coneRatios[2] >= 1.2 * coneRatios[1]);

  // Constant map: zero numerator, zero ratio.
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 32});
  const LipschitzReport flat = mainTheoremRatio(
      makeConstantMap(mesh, NpcTarget::euclidean(1), scalarPoint(0.3)),
      ConePoint{0.0, 0.0}, 0.5);
  CHECK(flat.ratio == 0.0);
  CHECK(flat.supPairRatio == 0.0);

  CHECK_THROWS_AS(mainTheoremRatio(linearMap(mesh, 1.0, 0.0),
                                   ConePoint{0.8, 0.0}, 0.5),
                  Error);
}

TEST_CASE("pointwise bound constant is refinement-stable on the disk") {
  double previous = -1.0;
  for (int level : {1, 2}) {
    const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, level, 8});
    const DirichletSolution solution = solveDirichlet(
        makeScalarDirichletProblem(
            mesh, [](const ConePoint& p) { return std::cos(2.0 * p.phi); }),
        SolverOptions{1e-10, 100000, false, false});
    const double constant = lipschitzDensityConstant(
        solution.map, ConePoint{0.0, 0.0}, 0.5, 4.0 * mesh.cone->spacing());
    CHECK(constant > 0.0);
    if (previous > 0.0) {
      CHECK(constant <= 1.5 * previous);
      CHECK(constant >= previous / 1.5);
    }
    previous = constant;
  }
}

TEST_CASE("sub-harmonicity residuals of scalar maps are exact") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});

  // Constant map: everything is identically zero.
  {
    const MapState flat =
        makeConstantMap(mesh, NpcTarget::euclidean(1), scalarPoint(2.0));
    CompositionOptions options;
    options.pairSamples = 500;
    const CompositionResiduals res =
        compositionResiduals(flat, {scalarPoint(0.5)}, options);
    CHECK(res.pairViolations == 0);
    CHECK(res.probeViolations == 0);
    CHECK(res.worstPairResidual >= -1e-15);
    CHECK(res.worstProbeMargin >= -1e-15);
  }

  // Linear map: discretely harmonic, both identities hold to rounding.
  {
    const MapState linear = linearMap(mesh, 0.8, -0.3);
    CompositionOptions options;
    options.pairSamples = 2000;
    options.pairTolerance = 1e-9;
    options.toleranceConstant = 0.0;  // demand the raw inequality
    const CompositionResiduals res =
        compositionResiduals(linear, {scalarPoint(0.0)}, options);
    CHECK(res.pairViolations == 0);
    CHECK(res.probeViolations == 0);
    CHECK(res.worstProbeMargin >= -1e-9);
  }

  // Solved scalar map: violations stay at solver-tolerance scale.
  {
    const DirichletSolution solution = solveDirichlet(
        makeScalarDirichletProblem(
            mesh, [](const ConePoint& p) { return std::cos(2.0 * p.phi); }),
        SolverOptions{1e-10, 100000, false, false});
    CompositionOptions options;
    options.pairSamples = 2000;
    options.pairTolerance = 1e-6;
    options.toleranceConstant = 1.0;
    const CompositionResiduals res =
        compositionResiduals(solution.map, {scalarPoint(0.2)}, options);
    CHECK(res.pairViolations == 0);
    CHECK(res.probeViolations == 0);
  }

  // Unsolved map: the stale-input guard refuses.
  {
    const MapState stale = makeScalarMap(
        mesh, [](const ConePoint& p) { return p.r * p.r * p.r; });
    CHECK_THROWS_AS(compositionResiduals(stale, {scalarPoint(0.0)},
                                         CompositionOptions{}),
                    Error);
  }
}

TEST_CASE("tripod maps violate sub-harmonicity only near the branch point") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});
  const NpcTarget target = NpcTarget::tree(MetricTree::tripod(1.0, 1.0, 1.0));
  const DirichletSolution solution = solveDirichlet(
      makeDirichletProblem(
          mesh, target,
          [&](const ConePoint& p) {
            const int leg =
                std::min(2, static_cast<int>(p.phi / (2.0 * kPi / 3.0)));
            return TargetPoint(
                TreePoint{leg, 0.4 + 0.1 * std::cos(3.0 * p.phi)});
          }),
      SolverOptions{1e-9, 200000, false, false});
  REQUIRE(solution.report.converged);

  CompositionOptions options;
  options.pairSamples = 4000;
  options.pairTolerance = 1e-6;
  options.staleTolerance = 1e-6;
  const CompositionResiduals res = compositionResiduals(
      solution.map, {target.nodePoint(0), TreePoint{0, 0.7}}, options);
  CHECK(res.pairViolations < res.pairSamples / 50);
  CHECK(res.probeViolations < res.probeChecks / 50);
}

TEST_CASE("scalar mean-value residuals") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 0, 50});
  const int V = mesh.vertexCount();

  // Equality case: f = 1 - r^2 with source -4; the sphere average minus the
  // center value matches -R^2 to discretization accuracy.
  std::vector<double> f(V), source(V, -4.0);
  for (int v = 0; v < V; ++v) {
    f[v] = 1.0 - mesh.vertices[v].r * mesh.vertices[v].r;
  }
  for (double residual :
       scalarMeanValueResiduals(mesh, f, source, 0, {0.2, 0.3, 0.4})) {
    CHECK(std::abs(residual) < 5e-3);
  }

  // Harmonic field: sphere averages reproduce the center value, improving
  // under refinement.
  auto harmonicResidual = [](const DomainMesh& m) {
    const int n = m.vertexCount();
    std::vector<double> boundary(n, 0.0);
    for (int v = 0; v < n; ++v) {
      if (m.boundaryFlags[v]) {
        boundary[v] = std::cos(2.0 * m.vertices[v].phi);
      }
    }
    const std::vector<double> field =
        solveScalarPoisson(m, std::vector<double>(n, 0.0), boundary);
    const int p = nearestVertex(m, ConePoint{0.3, 1.0});
    double worst = 0.0;
    for (double r :
         scalarMeanValueResiduals(m, field, std::vector<double>(n, 0.0), p,
                                  {0.2, 0.35, 0.5})) {
      worst = std::max(worst, std::abs(r));
    }
    return worst;
  };
  const double coarse =
      harmonicResidual(buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 0, 25}));
  const double fine = harmonicResidual(mesh);
  CHECK(fine < 5e-3);
  CHECK(fine <= coarse + 1e-3);

  CHECK_THROWS_AS(
      scalarMeanValueResiduals(mesh, f, source, 0, {1e-5}), Error);
  CHECK_THROWS_AS(
      scalarMeanValueResiduals(mesh, f, source, -1, {0.2}), Error);
}

TEST_CASE("map-space mean-value residuals") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 2, 8});

  // Constant map: the integrand vanishes identically.
  const MapState flat =
      makeConstantMap(mesh, NpcTarget::euclidean(1), scalarPoint(1.5));
  for (double residual :
       mapMeanValueResiduals(flat, scalarPoint(-2.0), 0, {0.2, 0.4})) {
    CHECK(residual == 0.0);
  }

  // Linear map with the probe at the origin: the ball integral cancels the
  // density term exactly in the continuum; the residual is quadrature noise.
  const double ax = 0.9, ay = 0.35;
  const MapState linear = linearMap(mesh, ax, ay);
  const int p = nearestVertex(mesh, ConePoint{0.3, 2.0});
  const double a2 = ax * ax + ay * ay;
  for (double R : {0.25, 0.4}) {
    const double residual =
        mapMeanValueResiduals(linear, scalarPoint(0.0), p, {R}).front();
    CHECK(std::abs(residual) < 0.15 * a2 * std::pow(R, 4.0));
  }
}

TEST_CASE("composition checks are deterministic for a fixed seed") {
  const DomainMesh mesh = buildConeMesh(ConeSpec{2.0 * kPi, 1.0, 1, 8});
  const MapState linear = linearMap(mesh, 0.5, 0.3);
  CompositionOptions options;
  options.pairSamples = 300;
  options.seed = 77;
  const CompositionResiduals a =
      compositionResiduals(linear, {scalarPoint(0.1)}, options);
  const CompositionResiduals b =
      compositionResiduals(linear, {scalarPoint(0.1)}, options);
  CHECK(a.worstPairResidual == b.worstPairResidual);
  CHECK(a.worstProbeMargin == b.worstProbeMargin);
  CHECK(a.pairViolations == b.pairViolations);
  CHECK(a.probeViolations == b.probeViolations);
}
