#include "harmlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "harmlab/error.hpp"

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

std::uint64_t mix(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

LipschitzProfile pointwiseLipschitz(const MapState& map, int x,
                                    std::vector<double> radii) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  require(x >= 0 && x < mesh.vertexCount(), ErrorKind::OutOfDomain,
          "probe vertex out of range");
  require(!radii.empty(), ErrorKind::Parameter, "probe radii must be given");
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  for (double r : radii) {
    require(r > 0.0, ErrorKind::Parameter, "probe radii must be positive");
  }

  LipschitzProfile profile;
  profile.radii = radii;
  profile.values.assign(radii.size(), 0.0);
  const MetricBall ball = metricBall(mesh, x, radii.front() * (1.0 + 1e-12));
  bool anyInSmallest = false;
  for (std::size_t k = 0; k < ball.vertices.size(); ++k) {
    const int y = ball.vertices[k];
    if (y == x) continue;
    const double d = ball.distances[k];
    const double ratio = map.target.distance(map.values[x], map.values[y]) / d;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      if (d <= radii[j]) {
        profile.values[j] = std::max(profile.values[j], ratio);
      }
    }
    anyInSmallest = anyInSmallest || d <= radii.back();
  }
  require(anyInSmallest, ErrorKind::Resolution,
          "smallest probe radius contains no vertex");
  profile.lipschitz = profile.values.back();
  return profile;
}

HolderFit holderExponentFit(const MapState& map, const ConePoint& center,
                            const std::vector<double>& radii) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  require(radii.size() >= 4, ErrorKind::Parameter,
          "exponent fit needs at least four radii");

  std::vector<double> logR, logOsc;
  std::vector<TargetPoint> inside;
  for (double r : radii) {
    require(r > 0.0, ErrorKind::Parameter, "fit radii must be positive");
    const MetricBall ball = metricBall(mesh, center, r);
    require(!ball.vertices.empty(), ErrorKind::Resolution,
            "fit radius contains no vertex");
    inside.clear();
    for (int v : ball.vertices) inside.push_back(map.values[v]);
    const double osc = map.target.oscillation(inside);
    if (osc > 1e-14) {
      logR.push_back(std::log(r));
      logOsc.push_back(std::log(osc));
    }
  }

  HolderFit fit;
  if (logR.size() < 2) return fit;  // degenerate: oscillations vanish
  const double n = static_cast<double>(logR.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < logR.size(); ++k) {
    sx += logR[k];
    sy += logOsc[k];
    sxx += logR[k] * logR[k];
    sxy += logR[k] * logOsc[k];
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n;
  double ss = 0.0;
  for (std::size_t k = 0; k < logR.size(); ++k) {
    const double e = logOsc[k] - (intercept + fit.exponent * logR[k]);
    ss += e * e;
  }
  fit.rmsResidual = std::sqrt(ss / n);
  fit.defined = true;
  return fit;
}

LipschitzReport mainTheoremRatio(const MapState& map, const ConePoint& q,
                                 double R) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  require(R > 0.0, ErrorKind::Parameter, "ball radius must be positive");
  require(mesh.cone.has_value(), ErrorKind::Config,
          "ratio probe needs a cone chart");
  require(q.r + 2.0 * R <= mesh.cone->radius + 1e-12, ErrorKind::Parameter,
          "doubled ball reaches the mesh boundary");
  const double h = meshSpacing(mesh);

  LipschitzReport report;
  const MetricBall inner =
      metricBall(mesh, q, R / 16.0 * (1.0 + 1e-12) + 1e-15);
  for (std::size_t a = 0; a < inner.vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < inner.vertices.size(); ++b) {
      const int x = inner.vertices[a];
      const int y = inner.vertices[b];
      const double sep = geodesicDistance(mesh, x, y);
      if (sep < 2.0 * h) continue;
      const double ratio =
          map.target.distance(map.values[x], map.values[y]) / sep;
      report.supPairRatio = std::max(report.supPairRatio, ratio);
      ++report.pairCount;
    }
  }

  const MetricBall outer = metricBall(mesh, q, R);
  const GraphEnergy graph = graphDirichletEnergy(map);
  double energy = 0.0;
  std::vector<TargetPoint> inside;
  for (int v : outer.vertices) {
    energy += graph.field.density[v] * mesh.measures[v];
    inside.push_back(map.values[v]);
  }
  require(outer.measure > 0.0, ErrorKind::Resolution,
          "ratio ball contains no vertex");
  report.energyMean = energy / outer.measure;
  report.oscillation = map.target.oscillation(inside);

  const double denominator = std::sqrt(report.energyMean) + report.oscillation;
  if (denominator <= 0.0) {
    require(report.supPairRatio <= 1e-14, ErrorKind::Inconsistency,
            "pair separation without energy or oscillation");
    report.ratio = 0.0;
  } else {
    report.ratio = report.supPairRatio / denominator;
  }
  return report;
}

double lipschitzDensityConstant(const MapState& map, const ConePoint& q,
                                double R, double probeRadius) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  require(R > 0.0 && probeRadius > 0.0, ErrorKind::Parameter,
          "radii must be positive");
  const GraphEnergy graph = graphDirichletEnergy(map);
  const MetricBall ball = metricBall(mesh, q, R);
  double worst = 0.0;
  for (int v : ball.vertices) {
    const double density = graph.field.density[v];
    if (density <= 1e-14) continue;
    const double lip =
        pointwiseLipschitz(map, v, {probeRadius}).lipschitz;
    worst = std::max(worst, lip * lip / density);
  }
  return worst;
}

CompositionResiduals compositionResiduals(const MapState& map,
                                          const std::vector<TargetPoint>& probes,
                                          const CompositionOptions& options) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  const NpcTarget& target = map.target;
  const double h = meshSpacing(mesh);

  std::vector<int> interior;
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    if (!mesh.boundaryFlags[v]) interior.push_back(v);
  }
  require(!interior.empty(), ErrorKind::DegenerateInput,
          "map has no interior vertices");

  // Stale-map guard: one barycenter pass must not move any vertex further
  // than the declared tolerance.
  {
    std::vector<TargetPoint> points;
    std::vector<double> weights;
    double displacement = 0.0;
    for (int v : interior) {
      points.clear();
      weights.clear();
      for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
           ++a) {
        const auto& nb = mesh.adjacency[a];
        if (mesh.edges[nb.edge].weight == 0.0) continue;
        points.push_back(map.values[nb.vertex]);
        weights.push_back(mesh.edges[nb.edge].weight);
      }
      const TargetPoint bary = target.weightedBarycenter(points, weights);
      displacement =
          std::max(displacement, target.distance(map.values[v], bary));
    }
    require(displacement <= options.staleTolerance, ErrorKind::Inconsistency,
            "map is not solved to the declared tolerance");
  }

  CompositionResiduals out;
  const GraphEnergy graph = graphDirichletEnergy(map);

  // (a) Kronecker-sum check at seeded interior pairs.
  auto pairDistance = [&](int x, int y) {
    return target.distance(map.values[x], map.values[y]);
  };
  std::uint64_t state = options.seed;
  out.worstPairResidual = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.pairSamples; ++s) {
    const int x = interior[mix(state) % interior.size()];
    const int y = interior[mix(state) % interior.size()];
    double residual = 0.0;
    const double fxy = pairDistance(x, y);
    for (int a = mesh.adjacencyOffsets[x]; a < mesh.adjacencyOffsets[x + 1];
         ++a) {
      const auto& nb = mesh.adjacency[a];
      residual += mesh.edges[nb.edge].weight * (pairDistance(nb.vertex, y) - fxy);
    }
    for (int a = mesh.adjacencyOffsets[y]; a < mesh.adjacencyOffsets[y + 1];
         ++a) {
      const auto& nb = mesh.adjacency[a];
      residual += mesh.edges[nb.edge].weight * (pairDistance(x, nb.vertex) - fxy);
    }
    out.worstPairResidual = std::min(out.worstPairResidual, residual);
    if (residual < -options.pairTolerance) ++out.pairViolations;
    ++out.pairSamples;
  }
  if (options.pairSamples == 0) out.worstPairResidual = 0.0;

  // (b) probe check: L(f_P^2) against twice the density.
  out.worstProbeMargin = std::numeric_limits<double>::infinity();
  bool anyProbe = false;
  for (const TargetPoint& probe : probes) {
    target.validate(probe);
    for (int v : interior) {
      const double fv = target.distance(map.values[v], probe);
      double lf2 = 0.0;
      double localLip = 0.0;
      for (int a = mesh.adjacencyOffsets[v]; a < mesh.adjacencyOffsets[v + 1];
           ++a) {
        const auto& nb = mesh.adjacency[a];
        const double fy = target.distance(map.values[nb.vertex], probe);
        lf2 += mesh.edges[nb.edge].weight * (fy * fy - fv * fv);
        localLip = std::max(
            localLip, target.distance(map.values[v], map.values[nb.vertex]) /
                          mesh.edges[nb.edge].length);
      }
      const double mu = mesh.measures[v];
      const double gap = lf2 - 2.0 * graph.field.density[v] * mu;
      const double tolScale = h * localLip * localLip * mu;
      const double tolerance = options.toleranceConstant * tolScale;
      out.worstProbeMargin = std::min(out.worstProbeMargin, gap + tolerance);
      if (gap + tolerance < -options.probeTolerance) ++out.probeViolations;
      if (gap < 0.0 && tolScale > 0.0) {
        out.fittedToleranceConstant =
            std::max(out.fittedToleranceConstant, -gap / tolScale);
      }
      ++out.probeChecks;
      anyProbe = true;
    }
  }
  if (!anyProbe) out.worstProbeMargin = 0.0;
  return out;
}

std::vector<double> scalarMeanValueResiduals(const DomainMesh& mesh,
                                             const std::vector<double>& f,
                                             const std::vector<double>& h,
                                             int p,
                                             const std::vector<double>& radii) {
  require(static_cast<int>(f.size()) == mesh.vertexCount(),
          ErrorKind::Inconsistency, "field must cover every vertex");
  require(static_cast<int>(h.size()) == mesh.vertexCount(),
          ErrorKind::Inconsistency, "source must cover every vertex");
  require(p >= 0 && p < mesh.vertexCount(), ErrorKind::OutOfDomain,
          "probe vertex out of range");
  const ComparisonGeometry geom = comparisonGeometry(mesh);
  (void)geom;  // validates that the curvature bound admits comparisons
  const double spacing = meshSpacing(mesh);
  const int n = mesh.dimension;

  std::vector<double> residuals;
  for (double R : radii) {
    require(R >= 2.0 * spacing, ErrorKind::Resolution,
            "sphere radius below twice the mesh spacing");
    const MetricBall wide = metricBall(mesh, p, R + spacing);
    double sum = 0.0, weight = 0.0;
    for (std::size_t k = 0; k < wide.vertices.size(); ++k) {
      // Triangular window of equivalent width one mesh spacing: tapering to
      // zero at the annulus rims removes the cut-cell noise a sharp window
      // picks up from vertices straddling the rims.
      const double hat = 1.0 - std::abs(wide.distances[k] - R) / spacing;
      if (hat <= 0.0) continue;
      const double w = hat * mesh.measures[wide.vertices[k]];
      sum += f[wide.vertices[k]] * w;
      weight += w;
    }
    require(weight > 0.0, ErrorKind::Resolution,
            "sphere annulus contains no vertex");
    const double average = sum / weight;
    residuals.push_back(average - f[p] - h[p] * R * R / (2.0 * n));
  }
  return residuals;
}

std::vector<double> mapMeanValueResiduals(const MapState& map,
                                          const TargetPoint& probe, int p,
                                          const std::vector<double>& radii) {
  map.validate();
  map.target.validate(probe);
  const DomainMesh& mesh = *map.domain;
  require(p >= 0 && p < mesh.vertexCount(), ErrorKind::OutOfDomain,
          "probe vertex out of range");
  const int n = mesh.dimension;
  const double omega = unitSphereArea(n);
  const GraphEnergy graph = graphDirichletEnergy(map);
  const double dp = map.target.distance(probe, map.values[p]);

  std::vector<double> residuals;
  for (double R : radii) {
    require(R > 0.0, ErrorKind::Parameter, "ball radius must be positive");
    const MetricBall ball = metricBall(mesh, p, R);
    require(!ball.vertices.empty(), ErrorKind::Resolution,
            "ball contains no vertex");
    double integral = 0.0;
    for (int v : ball.vertices) {
      const double dv = map.target.distance(probe, map.values[v]);
      integral += (dp * dp - dv * dv) * mesh.measures[v];
    }
    residuals.push_back(integral + graph.field.density[p] * omega /
                                       (n * (n + 2.0)) * std::pow(R, n + 2));
  }
  return residuals;
}

}  // namespace harmlab
