#include "harmlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "harmlab/error.hpp"

namespace harmlab {

MapState::MapState(const DomainMesh& mesh, NpcTarget targetSpace,
                   std::vector<TargetPoint> vertexValues)
    : domain(&mesh), target(std::move(targetSpace)),
      values(std::move(vertexValues)) {
  validate();
}

void MapState::validate() const {
  require(domain != nullptr, ErrorKind::InvalidSpec, "map has no domain");
  require(static_cast<int>(values.size()) == domain->vertexCount(),
          ErrorKind::Inconsistency,
          "map must assign a value to every vertex");
  for (const TargetPoint& value : values) target.validate(value);
}

MapState makeScalarMap(const DomainMesh& mesh,
                       const std::function<double(const ConePoint&)>& f) {
  std::vector<TargetPoint> values;
  values.reserve(mesh.vertexCount());
  for (const ConePoint& p : mesh.vertices) values.push_back(scalarPoint(f(p)));
  return MapState(mesh, NpcTarget::euclidean(1), std::move(values));
}

MapState makeConstantMap(const DomainMesh& mesh, const NpcTarget& target,
                         const TargetPoint& value) {
  target.validate(value);
  return MapState(mesh, target,
                  std::vector<TargetPoint>(mesh.vertexCount(), value));
}

namespace {

double ballDensity(const MapState& map, double p, double epsilon, int x,
                   double normalization) {
  const MetricBall ball = metricBall(*map.domain, x, epsilon);
  const TargetPoint& ux = map.values[x];
  double sum = 0.0;
  for (std::size_t k = 0; k < ball.vertices.size(); ++k) {
    const int y = ball.vertices[k];
    if (y == x) continue;
    const double d = map.target.distance(ux, map.values[y]);
    sum += std::pow(d, p) * map.domain->measures[y];
  }
  return normalization * sum;
}

double densityNormalization(const DomainMesh& mesh, double p, double epsilon) {
  const int n = mesh.dimension;
  return (n + p) / (ballNormalization(n, p) * std::pow(epsilon, n + p));
}

}  // namespace

double approxEnergyDensity(const MapState& map, double p, double epsilon,
                           int x) {
  map.validate();
  require(p >= 1.0, ErrorKind::Parameter, "density exponent must be >= 1");
  require(epsilon > 0.0, ErrorKind::Parameter,
          "density radius must be positive");
  require(x >= 0 && x < map.domain->vertexCount(), ErrorKind::OutOfDomain,
          "density vertex out of range");
  return ballDensity(map, p, epsilon,
                     x, densityNormalization(*map.domain, p, epsilon));
}

EnergyDensityField approxEnergyDensityField(const MapState& map, double p,
                                            double epsilon, int threads) {
  map.validate();
  require(p >= 1.0, ErrorKind::Parameter, "density exponent must be >= 1");
  require(epsilon > 0.0, ErrorKind::Parameter,
          "density radius must be positive");
  require(threads >= 1, ErrorKind::Parameter, "thread count must be >= 1");

  const DomainMesh& mesh = *map.domain;
  const int V = mesh.vertexCount();
  EnergyDensityField field;
  field.p = p;
  field.epsilon = epsilon;
  field.density.assign(V, 0.0);
  field.ballTouchesBoundary.assign(V, 0);

  std::vector<int> boundary;
  for (int v = 0; v < V; ++v) {
    if (mesh.boundaryFlags[v]) boundary.push_back(v);
  }
  const std::vector<double> boundaryDistance =
      boundary.empty() ? std::vector<double>(V, 0.0)
                       : distanceField(mesh, boundary);

  const double normalization = densityNormalization(mesh, p, epsilon);
  auto work = [&](int lo, int hi) {
    for (int v = lo; v < hi; ++v) {
      field.density[v] = ballDensity(map, p, epsilon, v, normalization);
      field.ballTouchesBoundary[v] = boundaryDistance[v] <= epsilon ? 1 : 0;
    }
  };
  if (threads == 1 || V < 4 * threads) {
    work(0, V);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (V + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(V, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (std::thread& worker : pool) worker.join();
  }
  return field;
}

GraphEnergy graphDirichletEnergy(const MapState& map) {
  map.validate();
  const DomainMesh& mesh = *map.domain;
  GraphEnergy out;
  out.field.p = 2.0;
  out.field.epsilon.reset();
  out.field.density.assign(mesh.vertexCount(), 0.0);
  for (const DomainMesh::Edge& e : mesh.edges) {
    const double d = map.target.distance(map.values[e.i], map.values[e.j]);
    const double term = e.weight * d * d;
    out.total += term;
    out.field.density[e.i] += term;
    out.field.density[e.j] += term;
  }
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    out.field.density[v] /= 2.0 * mesh.measures[v];
  }
  return out;
}

std::vector<DensityStudyRow> densityConvergenceStudy(
    const std::vector<const DomainMesh*>& levels,
    const std::function<MapState(const DomainMesh&)>& mapBuilder,
    const DensityStudyConfig& config) {
  require(!levels.empty(), ErrorKind::Config, "study needs at least one level");
  require(config.epsilons.size() == levels.size(), ErrorKind::Config,
          "study needs one ball radius per level");
  require(config.interiorRadius > 0.0, ErrorKind::Config,
          "study subdomain radius must be positive");
  for (std::size_t k = 0; k + 1 < config.epsilons.size(); ++k) {
    require(config.epsilons[k + 1] < config.epsilons[k], ErrorKind::Config,
            "study ball radii must decrease with refinement");
  }

  std::vector<DensityStudyRow> rows;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const DomainMesh& mesh = *levels[k];
    const double eps = config.epsilons[k];
    require(mesh.cone.has_value(), ErrorKind::Config,
            "study subdomain selection needs a cone chart");
    const double h = mesh.cone->spacing();
    require(eps >= 4.0 * h, ErrorKind::Parameter,
            "study ball radius below four mesh spacings");
    require(config.interiorRadius + eps <= mesh.cone->radius + 1e-12,
            ErrorKind::Config,
            "study subdomain ball reaches the mesh boundary");

    const MapState map = mapBuilder(mesh);
    require(map.domain == &mesh, ErrorKind::Config,
            "study map built for the wrong mesh");
    const GraphEnergy graph = graphDirichletEnergy(map);
    const double normalization = densityNormalization(mesh, config.p, eps);

    DensityStudyRow row;
    row.level = static_cast<int>(k);
    row.epsilon = eps;
    row.spacing = h;
    bool anyRatio = false;
    double lo = 0.0, hi = 0.0, ratioMass = 0.0, ratioSum = 0.0;
    for (int v = 0; v < mesh.vertexCount(); ++v) {
      if (mesh.vertices[v].r > config.interiorRadius) continue;
      const double ballDensityValue =
          ballDensity(map, config.p, eps, v, normalization);
      const double graphDensityValue = graph.field.density[v];
      row.l1Gap +=
          std::abs(ballDensityValue - graphDensityValue) * mesh.measures[v];
      row.interiorEnergy += graphDensityValue * mesh.measures[v];
      if (graphDensityValue > 1e-14) {
        const double ratio = ballDensityValue / graphDensityValue;
        ratioSum += ratio * mesh.measures[v];
        ratioMass += mesh.measures[v];
        if (!anyRatio) {
          lo = hi = ratio;
          anyRatio = true;
        } else {
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
        }
      }
    }
    if (anyRatio) {
      row.ratioMean = ratioSum / ratioMass;
      row.ratioLow = lo;
      row.ratioHigh = hi;
    }
    rows.push_back(row);
  }
  return rows;
}

double poincareResidual(const MapState& map, const ConePoint& center,
                        double r) {
  map.validate();
  require(r > 0.0, ErrorKind::Parameter, "pair-separation radius must be positive");
  const DomainMesh& mesh = *map.domain;
  require(mesh.cone.has_value(), ErrorKind::Config,
          "pair-separation constant needs a cone chart");
  require(center.r + 6.0 * r <= mesh.cone->radius + 1e-12, ErrorKind::Parameter,
          "outer ball reaches the mesh boundary");

  const MetricBall inner = metricBall(mesh, center, r);
  double numerator = 0.0;
  for (std::size_t a = 0; a < inner.vertices.size(); ++a) {
    const int x = inner.vertices[a];
    for (std::size_t b = a + 1; b < inner.vertices.size(); ++b) {
      const int y = inner.vertices[b];
      const double d = map.target.distance(map.values[x], map.values[y]);
      numerator += 2.0 * d * d * mesh.measures[x] * mesh.measures[y];
    }
  }

  const MetricBall outer = metricBall(mesh, center, 6.0 * r);
  const GraphEnergy graph = graphDirichletEnergy(map);
  double outerEnergy = 0.0;
  for (int v : outer.vertices) {
    outerEnergy += graph.field.density[v] * mesh.measures[v];
  }

  const int n = mesh.dimension;
  const double denominator = std::pow(r, n + 2) * outerEnergy;
  if (denominator <= 0.0) {
    require(numerator <= 1e-14, ErrorKind::Inconsistency,
            "pair separation without interior energy");
    return 0.0;
  }
  return numerator / denominator;
}

}  // namespace harmlab
