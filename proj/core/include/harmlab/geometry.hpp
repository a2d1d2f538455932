#pragma once

#include <optional>

#include "harmlab/error.hpp"

namespace harmlab {

// Lower curvature bound of a domain.  Nonpositive numeric bounds are the
// supported comparison regime; spaces whose curvature cannot be bounded below
// (cones with total angle above 2*pi) carry an empty bound and are rejected
// by every comparison-geometry operation.
struct CurvatureBound {
  // Empty means "no lower bound available".
  std::optional<double> k;

  static CurvatureBound bounded(double k);
  static CurvatureBound unboundedBelow() { return CurvatureBound{std::nullopt}; }
  bool isBounded() const { return k.has_value(); }
};

// Model geometry used for comparison statements: dimension n >= 2 and lower
// curvature bound k <= 0.  Provides the metric coefficient of the simply
// connected model surface of curvature k and derived sphere areas.
struct ComparisonGeometry {
  int n = 2;
  double k = 0.0;

  ComparisonGeometry(int n, double k);

  // Warped-product coefficient s_k(t): t for k = 0, sinh(sqrt(-k) t)/sqrt(-k)
  // for k < 0.  Defined for t >= 0.
  double metricCoefficient(double t) const;

  // Area of the geodesic sphere of radius R in the model:, omega_{n-1} * s_k(R)^{n-1}.
  double sphereArea(double R) const;
};

// Surface measure of the unit sphere S^{n-1} in R^n (n >= 1):
// 2 pi^{n/2} / Gamma(n/2).  unitSphereArea(2) == 2*pi.
double unitSphereArea(int n);

// Normalization constant c_{n,p} = \int_{S^{n-1}} |x_1|^p dsigma, computed by
// one-dimensional Gauss-Legendre quadrature (absolute accuracy ~1e-12) and
// cached per (n, p).  c_{2,2} == pi.
double ballNormalization(int n, double p);

}  // namespace harmlab
