#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "harmlab/target.hpp"

using namespace harmlab;

namespace {

// Objective of the barycenter problem.
double barycenterObjective(const NpcTarget& target, const TargetPoint& q,
                           const std::vector<TargetPoint>& pts,
                           const std::vector<double>& w) {
  double sum = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double d = target.distance(q, pts[i]);
    sum += w[i] * d * d;
  }
  return sum;
}

HyperbolicPoint hypAt(double s, double angle) {
  return HyperbolicPoint{{std::cosh(s), std::sinh(s) * std::cos(angle),
                          std::sinh(s) * std::sin(angle)}};
}

}  // namespace

TEST_CASE("euclidean target metric and geodesics") {
  const NpcTarget R2 = NpcTarget::euclidean(2);
  const TargetPoint a = EuclideanPoint{{0.0, 0.0}};
  const TargetPoint b = EuclideanPoint{{3.0, 4.0}};
  CHECK(R2.distance(a, b) == doctest::Approx(5.0).epsilon(1e-14));
  const TargetPoint mid = R2.geodesicPoint(a, b, 0.5);
  CHECK(std::get<EuclideanPoint>(mid).x[0] == doctest::Approx(1.5));
  CHECK(std::get<EuclideanPoint>(mid).x[1] == doctest::Approx(2.0));
}

TEST_CASE("hyperbolic target: distances along a known geodesic") {
  const NpcTarget H = NpcTarget::hyperbolicPlane();
  // Points (cosh s, sinh s, 0) lie on a unit-speed geodesic through origin.
  CHECK(H.distance(hypAt(0.0, 0.0), hypAt(1.0, 0.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(H.distance(hypAt(-0.3, 0.0), hypAt(0.9, 0.0)) ==
        doctest::Approx(1.2).epsilon(1e-12));
  // Nearby points keep full relative accuracy.
  CHECK(H.distance(hypAt(0.5, 0.0), hypAt(0.5 + 1e-9, 0.0)) ==
        doctest::Approx(1e-9).epsilon(1e-6));

  // Geodesic interpolation is an isometric parametrization.
  const TargetPoint p = hypAt(0.7, 0.3);
  const TargetPoint q = hypAt(1.1, 2.0);
  const double d = H.distance(p, q);
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const TargetPoint g = H.geodesicPoint(p, q, s);
    H.validate(g);
    CHECK(H.distance(p, g) == doctest::Approx(s * d).epsilon(1e-10));
    CHECK(H.distance(g, q) == doctest::Approx((1.0 - s) * d).epsilon(1e-10));
  }
}

TEST_CASE("tripod target: distances and geodesic walks") {
  const NpcTarget Y = NpcTarget::tree(MetricTree::tripod());
  const TargetPoint leg1 = TreePoint{0, 0.5};
  const TargetPoint leg2 = TreePoint{1, 0.4};
  CHECK(Y.distance(leg1, leg2) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(Y.distance(leg1, leg1) == 0.0);

  // Walking from leg 1 toward leg 2 passes through the center.
  const TargetPoint start = TreePoint{0, 0.8};
  const double total = Y.distance(start, leg2);  // 0.8 + 0.4
  CHECK(total == doctest::Approx(1.2).epsilon(1e-14));
  const TargetPoint half = Y.geodesicPoint(start, leg2, 0.5);
  const auto& hp = std::get<TreePoint>(half);
  CHECK(hp.edge == 0);
  CHECK(hp.offset == doctest::Approx(0.2).epsilon(1e-12));
  const TargetPoint deep = Y.geodesicPoint(start, leg2, 0.9);
  const auto& dp = std::get<TreePoint>(deep);
  CHECK(dp.edge == 1);
  CHECK(dp.offset == doctest::Approx(1.2 * 0.9 - 0.8).epsilon(1e-12));

  // Isometric parametrization.
  for (double s : {0.1, 0.35, 0.66}) {
    CHECK(Y.distance(start, Y.geodesicPoint(start, leg2, s)) ==
          doctest::Approx(s * total).epsilon(1e-12));
  }
}

TEST_CASE("metric axioms on random samples") {
  std::uint64_t seed = 2024;
  const std::vector<NpcTarget> targets = {
      NpcTarget::euclidean(3), NpcTarget::hyperbolicPlane(),
      NpcTarget::tree(MetricTree::tripod(1.0, 0.5, 2.0))};
  for (const auto& target : targets) {
    for (int trial = 0; trial < 200; ++trial) {
      const TargetPoint p = target.samplePoint(seed);
      const TargetPoint q = target.samplePoint(seed);
      const TargetPoint r = target.samplePoint(seed);
      CHECK(target.distance(p, q) == target.distance(q, p));
      CHECK(target.distance(p, p) == 0.0);
      CHECK(target.distance(p, q) <=
            target.distance(p, r) + target.distance(r, q) + 1e-12);
    }
  }
}

TEST_CASE("weighted barycenters") {
  SUBCASE("single point is its own barycenter") {
    const NpcTarget Y = NpcTarget::tree(MetricTree::tripod());
    const TargetPoint p = TreePoint{2, 0.3};
    const TargetPoint b = Y.weightedBarycenter({p}, {2.0});
    CHECK(Y.distance(p, b) < 1e-12);
  }
  SUBCASE("two equal weights give the midpoint") {
    for (const auto& target :
         {NpcTarget::euclidean(2), NpcTarget::hyperbolicPlane(),
          NpcTarget::tree(MetricTree::tripod())}) {
      std::uint64_t seed = 5;
      for (int trial = 0; trial < 20; ++trial) {
        const TargetPoint p = target.samplePoint(seed);
        const TargetPoint q = target.samplePoint(seed);
        const TargetPoint mid = target.geodesicPoint(p, q, 0.5);
        const TargetPoint bar = target.weightedBarycenter({p, q}, {1.0, 1.0});
        CHECK(target.distance(mid, bar) < 1e-8);
      }
    }
  }
  SUBCASE("euclidean closed form") {
    const NpcTarget R2 = NpcTarget::euclidean(2);
    const TargetPoint b = R2.weightedBarycenter(
        {EuclideanPoint{{0.0, 0.0}}, EuclideanPoint{{1.0, 0.0}},
         EuclideanPoint{{0.0, 1.0}}},
        {1.0, 2.0, 1.0});
    CHECK(std::get<EuclideanPoint>(b).x[0] == doctest::Approx(0.5));
    CHECK(std::get<EuclideanPoint>(b).x[1] == doctest::Approx(0.25));
  }
  SUBCASE("tripod tips balance at the center") {
    const NpcTarget Y = NpcTarget::tree(MetricTree::tripod());
    const TargetPoint b = Y.weightedBarycenter(
        {TreePoint{0, 1.0}, TreePoint{1, 1.0}, TreePoint{2, 1.0}},
        {1.0, 1.0, 1.0});
    CHECK(Y.distance(b, Y.nodePoint(0)) < 1e-12);
  }
  SUBCASE("tree barycenter matches a brute-force grid oracle") {
    const NpcTarget Y = NpcTarget::tree(MetricTree::tripod(1.0, 0.7, 1.3));
    std::uint64_t seed = 11;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<TargetPoint> pts;
      std::vector<double> w;
      for (int i = 0; i < 5; ++i) {
        pts.push_back(Y.samplePoint(seed));
        w.push_back(0.2 + 0.8 * static_cast<double>((trial + i) % 3));
      }
      const TargetPoint bar = Y.weightedBarycenter(pts, w);
      double gridBest = 1e300;
      for (int e = 0; e < 3; ++e) {
        const double len = Y.treeData().edges[e].length;
        for (int k = 0; k <= 2000; ++k) {
          const TargetPoint q = TreePoint{e, len * k / 2000.0};
          gridBest = std::min(gridBest, barycenterObjective(Y, q, pts, w));
        }
      }
      CHECK(barycenterObjective(Y, bar, pts, w) <= gridBest + 1e-9);
    }
  }
  SUBCASE("hyperbolic barycenter is first-order optimal") {
    const NpcTarget H = NpcTarget::hyperbolicPlane();
    std::uint64_t seed = 13;
    std::vector<TargetPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 6; ++i) {
      pts.push_back(H.samplePoint(seed));
      w.push_back(1.0 + (i % 2));
    }
    const TargetPoint bar = H.weightedBarycenter(pts, w, 1e-12);
    const double base = barycenterObjective(H, bar, pts, w);
    for (const auto& pt : pts) {
      for (double step : {1e-4, 1e-3}) {
        if (H.distance(bar, pt) < 1e-9) continue;
        const TargetPoint probe =
            H.geodesicPoint(bar, pt, std::min(1.0, step / H.distance(bar, pt)));
        CHECK(barycenterObjective(H, probe, pts, w) >= base - 1e-7);
      }
    }
  }
  SUBCASE("degenerate inputs are rejected") {
    const NpcTarget R1 = NpcTarget::euclidean(1);
    CHECK_THROWS_AS(R1.weightedBarycenter({}, {}), Error);
    CHECK_THROWS_AS(
        R1.weightedBarycenter({scalarPoint(0.0)}, {0.0}), Error);
    CHECK_THROWS_AS(
        R1.weightedBarycenter({scalarPoint(0.0)}, {-1.0}), Error);
  }
}

TEST_CASE("four-point comparison residual") {
  SUBCASE("degenerate quadruple vanishes") {
    const NpcTarget R1 = NpcTarget::euclidean(1);
    const TargetPoint p = scalarPoint(0.4);
    CHECK(R1.quadrupleResidual(p, p, p, p) == doctest::Approx(0.0));
  }
  SUBCASE("collinear evenly spaced points give equality") {
    const NpcTarget R1 = NpcTarget::euclidean(1);
    const double res = R1.quadrupleResidual(scalarPoint(0.0), scalarPoint(1.0),
                                            scalarPoint(2.0), scalarPoint(3.0));
    CHECK(std::abs(res) < 1e-12);
  }
  SUBCASE("random quadruples are nonnegative in every target") {
    std::uint64_t seed = 321;
    const std::vector<NpcTarget> targets = {
        NpcTarget::euclidean(3), NpcTarget::hyperbolicPlane(),
        NpcTarget::tree(MetricTree::tripod())};
    for (const auto& target : targets) {
      for (int trial = 0; trial < 1000; ++trial) {
        const TargetPoint p = target.samplePoint(seed);
        const TargetPoint q = target.samplePoint(seed);
        const TargetPoint r = target.samplePoint(seed);
        const TargetPoint s = target.samplePoint(seed);
        CHECK(target.quadrupleResidual(p, q, r, s) >= -1e-9);
      }
    }
  }
  SUBCASE("midpoint comparison inequality") {
    std::uint64_t seed = 7777;
    const std::vector<NpcTarget> targets = {
        NpcTarget::euclidean(2), NpcTarget::hyperbolicPlane(),
        NpcTarget::tree(MetricTree::tripod(2.0, 1.0, 1.0))};
    for (const auto& target : targets) {
      for (int trial = 0; trial < 500; ++trial) {
        const TargetPoint p = target.samplePoint(seed);
        const TargetPoint q = target.samplePoint(seed);
        const TargetPoint r = target.samplePoint(seed);
        const TargetPoint m = target.geodesicPoint(q, r, 0.5);
        const double dpm = target.distance(p, m);
        const double dpq = target.distance(p, q);
        const double dpr = target.distance(p, r);
        const double dqr = target.distance(q, r);
        CHECK(dpm * dpm <=
              0.5 * dpq * dpq + 0.5 * dpr * dpr - 0.25 * dqr * dqr + 1e-9);
      }
    }
  }
}

TEST_CASE("oscillation helpers") {
  const NpcTarget R1 = NpcTarget::euclidean(1);
  CHECK(R1.oscillation({scalarPoint(0.5), scalarPoint(-1.0),
                        scalarPoint(2.0)}) == doctest::Approx(3.0));

  const NpcTarget Y = NpcTarget::tree(MetricTree::tripod(1.0, 2.0, 0.5));
  std::uint64_t seed = 31;
  std::vector<TargetPoint> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(Y.samplePoint(seed));
  double brute = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = 0; j < pts.size(); ++j) {
      brute = std::max(brute, Y.distance(pts[i], pts[j]));
    }
  }
  CHECK(Y.oscillation(pts) == doctest::Approx(brute).epsilon(1e-13));
}

TEST_CASE("point validation catches mismatches") {
  const NpcTarget R2 = NpcTarget::euclidean(2);
  const NpcTarget H = NpcTarget::hyperbolicPlane();
  const NpcTarget Y = NpcTarget::tree(MetricTree::tripod());

  CHECK_THROWS_AS(R2.validate(TreePoint{0, 0.0}), Error);
  CHECK_THROWS_AS(R2.validate(EuclideanPoint{{1.0}}), Error);
  CHECK_THROWS_AS(H.validate(HyperbolicPoint{{1.0, 1.0, 0.0}}), Error);
  CHECK_THROWS_AS(Y.validate(TreePoint{5, 0.0}), Error);
  CHECK_THROWS_AS(Y.validate(TreePoint{0, 2.0}), Error);
  CHECK_NOTHROW(Y.validate(TreePoint{0, 1.0}));
}

TEST_CASE("sampling is deterministic per seed") {
  const NpcTarget H = NpcTarget::hyperbolicPlane();
  std::uint64_t s1 = 1234, s2 = 1234;
  for (int i = 0; i < 10; ++i) {
    const auto a = std::get<HyperbolicPoint>(H.samplePoint(s1));
    const auto b = std::get<HyperbolicPoint>(H.samplePoint(s2));
    CHECK(a.x == b.x);
  }
}

TEST_CASE("tree topology validation") {
  MetricTree bad;
  bad.nodeCount = 3;
  bad.edges = {{0, 1, 1.0}};  // wrong edge count
  CHECK_THROWS_AS(bad.finalize(), Error);

  MetricTree cyclic;
  cyclic.nodeCount = 3;
  cyclic.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  CHECK_NOTHROW(cyclic.finalize());

  MetricTree loop;
  loop.nodeCount = 4;
  loop.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}};
  CHECK_THROWS_AS(loop.finalize(), Error);  // disconnected node 3 / cycle
}
