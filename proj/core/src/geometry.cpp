#include "harmlab/geometry.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace harmlab {

CurvatureBound CurvatureBound::bounded(double k) {
  require(k <= 0.0, ErrorKind::InvalidSpec,
          "curvature bound must be nonpositive");
  return CurvatureBound{k};
}

ComparisonGeometry::ComparisonGeometry(int n_, double k_) : n(n_), k(k_) {
  require(n >= 2, ErrorKind::InvalidSpec, "comparison dimension must be >= 2");
  require(k <= 0.0, ErrorKind::InvalidSpec,
          "comparison curvature bound must be nonpositive");
}

double ComparisonGeometry::metricCoefficient(double t) const {
  require(t >= 0.0, ErrorKind::Parameter, "metric coefficient needs t >= 0");
  if (k == 0.0) return t;
  const double s = std::sqrt(-k);
  return std::sinh(s * t) / s;
}

double ComparisonGeometry::sphereArea(double R) const {
  require(R > 0.0, ErrorKind::Parameter, "sphere radius must be positive");
  return unitSphereArea(n) * std::pow(metricCoefficient(R), n - 1);
}

double unitSphereArea(int n) {
  require(n >= 1, ErrorKind::Parameter, "sphere dimension must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

// Nodes/weights of 32-point Gauss-Legendre on [-1, 1] (positive half; the
// rule is symmetric).  Composite application over subintervals gives well
// below 1e-12 absolute error for the smooth integrands used here.
constexpr int kHalf = 16;
constexpr double kNodes[kHalf] = {
    0.0483076656877383162, 0.1444719615827964934, 0.2392873622521370745,
    0.3318686022821276497, 0.4213512761306353454, 0.5068999089322293900,
    0.5877157572407623290, 0.6630442669302152010, 0.7321821187402896804,
    0.7944837959679424069, 0.8493676137325699701, 0.8963211557660521240,
    0.9349060759377396891, 0.9647622555875064308, 0.9856115115452683354,
    0.9972638618494815635};
constexpr double kWeights[kHalf] = {
    0.0965400885147278006, 0.0956387200792748594, 0.0938443990808045654,
    0.0911738786957638847, 0.0876520930044038111, 0.0833119242269467552,
    0.0781938957870703065, 0.0723457941088485062, 0.0658222227763618468,
    0.0586840934785355471, 0.0509980592623761762, 0.0428358980222266807,
    0.0342738629130214331, 0.0253920653092620595, 0.0162743947309056706,
    0.0070186100094700966};

template <typename F>
double gauss32(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < kHalf; ++i) {
    sum += kWeights[i] *
           (f(mid + half * kNodes[i]) + f(mid - half * kNodes[i]));
  }
  return half * sum;
}

}  // namespace

double ballNormalization(int n, double p) {
  require(n >= 2, ErrorKind::Parameter, "ball normalization needs n >= 2");
  require(p > 0.0, ErrorKind::Parameter, "ball normalization needs p > 0");

  static std::map<std::pair<int, double>, double> cache;
  static std::mutex cacheMutex;
  {
    std::lock_guard<std::mutex> lock(cacheMutex);
    auto it = cache.find({n, p});
    if (it != cache.end()) return it->second;
  }

  // Reduce the sphere integral to one dimension:
  //   \int_{S^{n-1}} |x_1|^p dsigma
  //     = omega_{n-2} \int_0^pi |cos t|^p sin^{n-2} t dt   (n >= 2, omega_0 = 2).
  // The integrand has a kink at pi/2 for non-even p, so integrate the two
  // smooth halves separately (composite 32-point Gauss-Legendre each).
  auto integrand = [n, p](double t) {
    return std::pow(std::abs(std::cos(t)), p) *
           std::pow(std::sin(t), static_cast<double>(n - 2));
  };
  const double pi = std::numbers::pi;
  double integral = 0.0;
  const int panels = 8;
  for (int half = 0; half < 2; ++half) {
    const double lo = half == 0 ? 0.0 : 0.5 * pi;
    const double hi = half == 0 ? 0.5 * pi : pi;
    const double step = (hi - lo) / panels;
    for (int i = 0; i < panels; ++i) {
      integral += gauss32(integrand, lo + i * step, lo + (i + 1) * step);
    }
  }
  const double value = unitSphereArea(n - 1) * integral;

  std::lock_guard<std::mutex> lock(cacheMutex);
  cache.emplace(std::make_pair(n, p), value);
  return value;
}

}  // namespace harmlab
