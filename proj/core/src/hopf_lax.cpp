#include "harmlab/hopf_lax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "harmlab/error.hpp"
#include "harmlab/regularity.hpp"

namespace harmlab {

namespace {

double meshSpacing(const DomainMesh& mesh) {
  if (mesh.cone) return mesh.cone->spacing();
  double shortest = std::numeric_limits<double>::infinity();
  for (const DomainMesh::Edge& e : mesh.edges) {
    shortest = std::min(shortest, e.length);
  }
  return shortest;
}

std::vector<char> membershipMask(const DomainMesh& mesh,
                                 const std::vector<int>& vertices,
                                 const char* label) {
  std::vector<char> mask(mesh.vertexCount(), 0);
  for (int v : vertices) {
    require(v >= 0 && v < mesh.vertexCount(), ErrorKind::OutOfDomain, label);
    mask[v] = 1;
  }
  return mask;
}

}  // namespace

HopfLaxField computeHopfLax(const MapState& map, const HopfLaxConfig& config) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  const NpcTarget& target = map.target;

  require(config.t > 0.0, ErrorKind::Parameter,
          "time parameter must be positive");
  require(!config.lambdaGrid.empty(), ErrorKind::Parameter,
          "family grid must not be empty");
  for (std::size_t j = 0; j < config.lambdaGrid.size(); ++j) {
    const double l = config.lambdaGrid[j];
    require(l >= 0.0 && l <= 1.0, ErrorKind::Parameter,
            "family grid must lie within [0, 1]");
    require(j == 0 || config.lambdaGrid[j - 1] < l, ErrorKind::Parameter,
            "family grid must increase strictly");
  }
  require(!config.inner.empty(), ErrorKind::Parameter,
          "evaluation set must not be empty");
  require(!config.outer.empty(), ErrorKind::Parameter,
          "search set must not be empty");
  const std::vector<char> outerMask =
      membershipMask(mesh, config.outer, "search vertex out of range");
  for (int v : config.inner) {
    require(v >= 0 && v < mesh.vertexCount(), ErrorKind::OutOfDomain,
            "evaluation vertex out of range");
    require(outerMask[v], ErrorKind::Parameter,
            "evaluation set must lie inside the search set");
  }
  require(mesh.curvature.isBounded(), ErrorKind::Config,
          "field needs a lower curvature bound");

  HopfLaxField field;
  field.domain = map.domain;
  field.t = config.t;
  field.lambdaGrid = config.lambdaGrid;
  field.inner = config.inner;
  field.outer = config.outer;
  field.curvature = *mesh.curvature.k;

  // Oscillation of the map over the search set and the derived constants.
  {
    std::vector<TargetPoint> values;
    values.reserve(config.outer.size());
    for (int v : config.outer) values.push_back(map.values[v]);
    field.oscillation = target.oscillation(values);
  }
  field.cStar = 2.0 * field.oscillation + 2.0;

  // Rim of the search set: its mesh-boundary vertices plus vertices with a
  // graph neighbor outside the set.
  std::vector<int> rim;
  for (int v : config.outer) {
    bool onRim = mesh.boundaryFlags[v] != 0;
    for (int a = mesh.adjacencyOffsets[v];
         !onRim && a < mesh.adjacencyOffsets[v + 1]; ++a) {
      onRim = !outerMask[mesh.adjacency[a].vertex];
    }
    if (onRim) rim.push_back(v);
  }
  require(!rim.empty(), ErrorKind::Topology, "search set has no rim");
  {
    const std::vector<double> toRim = distanceField(mesh, rim);
    double separation = std::numeric_limits<double>::infinity();
    for (int v : config.inner) separation = std::min(separation, toRim[v]);
    field.separation = separation;
  }
  field.horizon = field.separation * field.separation / (4.0 * field.cStar);
  require(config.t < field.horizon, ErrorKind::Parameter,
          "time parameter must stay below separation^2 / (4 cStar)");

  const int n = mesh.dimension;
  const double k = field.curvature;
  const double h = meshSpacing(mesh);
  const double searchRadius = std::sqrt(field.cStar * config.t);

  double mapLip = 0.0;
  for (const DomainMesh::Edge& e : mesh.edges) {
    if (e.length <= 0.0) continue;
    mapLip = std::max(
        mapLip, target.distance(map.values[e.i], map.values[e.j]) / e.length);
  }
  field.integrandLipschitz =
      std::exp(std::max(0.0, -2.0 * n * k)) * searchRadius / config.t + mapLip;
  field.argminTolerance = config.argminTolerance < 0.0
                              ? 1e-9 + h * field.integrandLipschitz
                              : config.argminTolerance;

  const std::size_t rows = config.inner.size();
  const std::size_t cols = config.lambdaGrid.size();
  field.values.assign(rows * cols, 0.0);
  field.argminDistance.assign(rows * cols, 0.0);
  field.argminSets.assign(rows * cols, {});

  std::vector<int> candidates;
  std::vector<double> squared, pull;
  for (std::size_t row = 0; row < rows; ++row) {
    const int x = config.inner[row];
    const MetricBall ball =
        metricBall(mesh, x, searchRadius * (1.0 + 1e-12) + 1e-15);
    candidates.clear();
    squared.clear();
    pull.clear();
    for (std::size_t i = 0; i < ball.vertices.size(); ++i) {
      const int y = ball.vertices[i];
      if (!outerMask[y]) continue;
      candidates.push_back(y);
      squared.push_back(ball.distances[i] * ball.distances[i]);
      pull.push_back(target.distance(map.values[x], map.values[y]));
    }
    require(!candidates.empty(), ErrorKind::Resolution,
            "search ball contains no vertex");

    for (std::size_t col = 0; col < cols; ++col) {
      const double factor = std::exp(-2.0 * n * k * config.lambdaGrid[col]);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        best = std::min(best,
                        factor * squared[i] / (2.0 * config.t) - pull[i]);
      }
      const double band = best + field.argminTolerance;
      double nearest = std::numeric_limits<double>::infinity();
      std::vector<int>& members = field.argminSets[field.cell(row, col)];
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double value =
            factor * squared[i] / (2.0 * config.t) - pull[i];
        if (value <= band) {
          members.push_back(candidates[i]);
          nearest = std::min(nearest, std::sqrt(squared[i]));
        }
      }
      field.values[field.cell(row, col)] = best;
      field.argminDistance[field.cell(row, col)] = nearest;
    }
  }
  return field;
}

HopfLaxReport hopfLaxPropertyResiduals(const HopfLaxField& field,
                                       const MapState& map) {
  map.validate();
  require(field.domain == map.domain, ErrorKind::Inconsistency,
          "field and map live on different meshes");
  {
    std::vector<TargetPoint> values;
    values.reserve(field.outer.size());
    for (int v : field.outer) values.push_back(map.values[v]);
    require(std::abs(map.target.oscillation(values) - field.oscillation) <=
                1e-12 * (1.0 + field.oscillation),
            ErrorKind::Inconsistency, "field was computed from another map");
  }
  const std::size_t cols = field.lambdaGrid.size();
  double maxStep = 0.0;
  for (std::size_t j = 1; j < cols; ++j) {
    maxStep = std::max(maxStep,
                       field.lambdaGrid[j] - field.lambdaGrid[j - 1]);
  }
  require(cols < 2 || maxStep <= 0.05 + 1e-15, ErrorKind::Config,
          "family grid spacing must not exceed 0.05");

  const DomainMesh& mesh = *field.domain;
  const int n = mesh.dimension;
  const double k = field.curvature;
  const double h = meshSpacing(mesh);
  const double lambdaBound = std::exp(-2.0 * n * k) * field.cStar;
  const double distanceBound = std::sqrt(field.cStar * field.t) + h;

  HopfLaxReport report;
  report.derivativeTolerance = field.cStar * maxStep;
  report.lowestValue = std::numeric_limits<double>::infinity();
  report.highestValue = -std::numeric_limits<double>::infinity();
  report.worstLambdaLipschitzExcess =
      -std::numeric_limits<double>::infinity();
  report.worstDistanceExcess = -std::numeric_limits<double>::infinity();
  report.worstDerivativeMargin = std::numeric_limits<double>::infinity();

  for (std::size_t row = 0; row < field.inner.size(); ++row) {
    for (std::size_t col = 0; col < cols; ++col) {
      const double f = field.value(row, col);
      const double L = field.distance(row, col);
      ++report.cells;
      report.lowestValue = std::min(report.lowestValue, f);
      report.highestValue = std::max(report.highestValue, f);
      if (f > 1e-12 || f < -field.oscillation - 1e-12) {
        ++report.rangeViolations;
      }
      const double excess = L - distanceBound;
      report.worstDistanceExcess =
          std::max(report.worstDistanceExcess, excess);
      if (excess > 1e-9) ++report.distanceBoundViolations;

      for (std::size_t other = col + 1; other < cols; ++other) {
        const double step = field.lambdaGrid[other] - field.lambdaGrid[col];
        const double pairExcess =
            std::abs(field.value(row, other) - f) - lambdaBound * step;
        report.worstLambdaLipschitzExcess =
            std::max(report.worstLambdaLipschitzExcess, pairExcess);
        if (pairExcess > 1e-9) ++report.lambdaLipschitzViolations;
      }

      if (col + 1 < cols) {
        const double step = field.lambdaGrid[col + 1] - field.lambdaGrid[col];
        const double factor =
            std::exp(-2.0 * n * k * field.lambdaGrid[col]);
        const double margin = (field.value(row, col + 1) - f) / step +
                              factor * (n * k / field.t) * L * L +
                              field.cStar * step;
        report.worstDerivativeMargin =
            std::min(report.worstDerivativeMargin, margin);
        if (margin < -1e-9) ++report.derivativeViolations;
      }
    }
  }
  if (report.cells == 0) {
    report.lowestValue = report.highestValue = 0.0;
    report.worstLambdaLipschitzExcess = 0.0;
    report.worstDistanceExcess = 0.0;
  }
  if (report.worstDerivativeMargin ==
      std::numeric_limits<double>::infinity()) {
    report.worstDerivativeMargin = 0.0;
  }
  return report;
}

SupersolutionReport supersolutionResidual(const HopfLaxField& field,
                                          std::size_t lambdaIndex,
                                          double toleranceConstant) {
  require(field.domain != nullptr, ErrorKind::DegenerateInput,
          "field has no mesh");
  require(lambdaIndex < field.lambdaGrid.size(), ErrorKind::Parameter,
          "family index out of range");
  const DomainMesh& mesh = *field.domain;
  const int n = mesh.dimension;
  const double k = field.curvature;
  const double h = meshSpacing(mesh);
  const double factor =
      std::exp(-2.0 * n * k * field.lambdaGrid[lambdaIndex]);

  std::vector<int> rowOf(mesh.vertexCount(), -1);
  for (std::size_t row = 0; row < field.inner.size(); ++row) {
    rowOf[field.inner[row]] = static_cast<int>(row);
  }

  SupersolutionReport report;
  report.toleranceConstant = toleranceConstant;
  for (std::size_t row = 0; row < field.inner.size(); ++row) {
    const int x = field.inner[row];
    bool fullInterior = !mesh.boundaryFlags[x];
    for (int a = mesh.adjacencyOffsets[x];
         fullInterior && a < mesh.adjacencyOffsets[x + 1]; ++a) {
      fullInterior = rowOf[mesh.adjacency[a].vertex] >= 0;
    }
    if (!fullInterior) {
      ++report.excluded;
      continue;
    }
    const double fx = field.value(row, lambdaIndex);
    double lf = 0.0;
    double localLip = 0.0;
    for (int a = mesh.adjacencyOffsets[x]; a < mesh.adjacencyOffsets[x + 1];
         ++a) {
      const auto& nb = mesh.adjacency[a];
      const double fy =
          field.value(static_cast<std::size_t>(rowOf[nb.vertex]), lambdaIndex);
      lf += mesh.edges[nb.edge].weight * (fy - fx);
      if (mesh.edges[nb.edge].length > 0.0) {
        localLip = std::max(localLip,
                            std::abs(fy - fx) / mesh.edges[nb.edge].length);
      }
    }
    const double mu = mesh.measures[x];
    const double L = field.distance(row, lambdaIndex);
    const double rhs = -factor * (n * k / field.t) * L * L * mu;
    const double gap = lf - rhs;
    const double tolerance = toleranceConstant * h * localLip;
    report.vertices.push_back(x);
    report.gaps.push_back(gap);
    report.tolerances.push_back(tolerance);
    if (gap > tolerance + 1e-12) ++report.violations;
    if (gap > 1e-15 && h * localLip > 0.0) {
      report.fittedConstant =
          std::max(report.fittedConstant, gap / (h * localLip));
    }
  }
  return report;
}

TimeDerivativeProfile timeDerivativeResidual(const MapState& map,
                                             const HopfLaxConfig& config,
                                             const std::vector<int>& probes,
                                             std::size_t lambdaIndex,
                                             const std::vector<double>& sList) {
  require(!sList.empty(), ErrorKind::Parameter, "step list must not be empty");
  for (std::size_t i = 0; i < sList.size(); ++i) {
    require(sList[i] > 0.0, ErrorKind::Parameter, "steps must be positive");
    require(i == 0 || sList[i] < sList[i - 1], ErrorKind::Parameter,
            "steps must decrease strictly");
  }
  require(!probes.empty(), ErrorKind::Parameter,
          "probe list must not be empty");
  require(lambdaIndex < config.lambdaGrid.size(), ErrorKind::Parameter,
          "family index out of range");

  const HopfLaxField base = computeHopfLax(map, config);
  require(config.t + sList.front() < base.horizon, ErrorKind::Parameter,
          "stepped time parameter must stay below the horizon");
  const DomainMesh& mesh = *map.domain;
  const double h = meshSpacing(mesh);
  const double radius = 4.0 * h;

  std::vector<int> rowOf(mesh.vertexCount(), -1);
  for (std::size_t row = 0; row < base.inner.size(); ++row) {
    rowOf[base.inner[row]] = static_cast<int>(row);
  }

  TimeDerivativeProfile profile;
  profile.vertices = probes;
  profile.sValues = sList;

  // One-sided gradient and Lipschitz bound per probe at radius 4h.
  for (int x : probes) {
    require(x >= 0 && x < mesh.vertexCount(), ErrorKind::OutOfDomain,
            "probe vertex out of range");
    require(rowOf[x] >= 0, ErrorKind::Parameter,
            "probe must lie in the evaluation set");
    const double lip = pointwiseLipschitz(map, x, {radius}).lipschitz;
    const double vx =
        -base.value(static_cast<std::size_t>(rowOf[x]), lambdaIndex);
    const MetricBall ball = metricBall(mesh, x, radius * (1.0 + 1e-12));
    double oneSided = 0.0;
    bool anyNeighbor = false;
    for (int y : ball.vertices) {
      if (y == x || rowOf[y] < 0) continue;
      anyNeighbor = true;
      const double vy =
          -base.value(static_cast<std::size_t>(rowOf[y]), lambdaIndex);
      oneSided = std::max(oneSided, (vy - vx) / radius);
    }
    require(anyNeighbor, ErrorKind::Resolution,
            "gradient radius contains no evaluation vertex");
    profile.bounds.push_back(lip * lip + oneSided * oneSided);
  }

  profile.forwardDifferences.assign(probes.size() * sList.size(), 0.0);
  profile.residuals.assign(probes.size() * sList.size(), 0.0);
  for (std::size_t si = 0; si < sList.size(); ++si) {
    HopfLaxConfig stepped = config;
    stepped.t = config.t + sList[si];
    const HopfLaxField next = computeHopfLax(map, stepped);
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      const std::size_t row = static_cast<std::size_t>(rowOf[probes[pi]]);
      const double v0 = -base.value(row, lambdaIndex);
      const double v1 = -next.value(row, lambdaIndex);
      const double fd = (v1 - v0) / sList[si];
      profile.forwardDifferences[profile.cell(pi, si)] = fd;
      profile.residuals[profile.cell(pi, si)] = fd - profile.bounds[pi];
    }
  }
  return profile;
}

}  // namespace harmlab
