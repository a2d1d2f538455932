#include "harmlab/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace harmlab {

namespace {

// --- hyperboloid-model primitives -----------------------------------------

double minkDot(const std::array<double, 3>& p, const std::array<double, 3>& q) {
  return p[0] * q[0] - p[1] * q[1] - p[2] * q[2];
}

// Renormalizes a timelike vector onto the x0 > 0 hyperboloid sheet.
HyperbolicPoint hypNormalize(std::array<double, 3> v) {
  const double q = v[0] * v[0] - v[1] * v[1] - v[2] * v[2];
  require(q > 0.0 && v[0] > 0.0, ErrorKind::DegenerateInput,
          "vector does not point into the hyperboloid sheet");
  const double s = std::sqrt(q);
  return HyperbolicPoint{{v[0] / s, v[1] / s, v[2] / s}};
}

// Geodesic distance, evaluated through the spacelike chord so that nearby
// points keep full relative accuracy:  |P-Q|_M = 2 sinh(d/2).
double hypDistance(const HyperbolicPoint& p, const HyperbolicPoint& q) {
  const double d0 = p.x[0] - q.x[0], d1 = p.x[1] - q.x[1], d2 = p.x[2] - q.x[2];
  const double chord2 = d1 * d1 + d2 * d2 - d0 * d0;
  if (chord2 <= 0.0) return 0.0;
  return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
}

HyperbolicPoint hypGeodesic(const HyperbolicPoint& p, const HyperbolicPoint& q,
                            double s) {
  const double d = hypDistance(p, q);
  if (d < 1e-8) {  // chordal interpolation is exact to O(d^2) here
    std::array<double, 3> v{p.x[0] + s * (q.x[0] - p.x[0]),
                            p.x[1] + s * (q.x[1] - p.x[1]),
                            p.x[2] + s * (q.x[2] - p.x[2])};
    return hypNormalize(v);
  }
  const double c = std::cosh(d), sh = std::sinh(d);
  // Unit tangent at p toward q.
  std::array<double, 3> u{(q.x[0] - c * p.x[0]) / sh, (q.x[1] - c * p.x[1]) / sh,
                          (q.x[2] - c * p.x[2]) / sh};
  const double a = std::cosh(s * d), b = std::sinh(s * d);
  return hypNormalize({a * p.x[0] + b * u[0], a * p.x[1] + b * u[1],
                       a * p.x[2] + b * u[2]});
}

// Riemannian log map at q (tangent vector stored ambiently).
std::array<double, 3> hypLog(const HyperbolicPoint& q, const HyperbolicPoint& p) {
  const double d = hypDistance(q, p);
  if (d == 0.0) return {0.0, 0.0, 0.0};
  const double c = std::cosh(d), sh = std::sinh(d);
  return {(p.x[0] - c * q.x[0]) * d / sh, (p.x[1] - c * q.x[1]) * d / sh,
          (p.x[2] - c * q.x[2]) * d / sh};
}

HyperbolicPoint hypExp(const HyperbolicPoint& q, const std::array<double, 3>& v) {
  const double n2 = v[1] * v[1] + v[2] * v[2] - v[0] * v[0];
  if (n2 <= 0.0) return q;
  const double n = std::sqrt(n2);
  if (n < 1e-14) return q;
  const double c = std::cosh(n), sh = std::sinh(n) / n;
  return hypNormalize(
      {c * q.x[0] + sh * v[0], c * q.x[1] + sh * v[1], c * q.x[2] + sh * v[2]});
}

// --- deterministic sampling ------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

// --- MetricTree --------------------------------------------------------------

void MetricTree::finalize() {
  require(nodeCount >= 1, ErrorKind::InvalidSpec, "tree needs at least a node");
  require(static_cast<int>(edges.size()) == nodeCount - 1, ErrorKind::Topology,
          "a tree on n nodes has exactly n-1 edges");
  std::vector<std::vector<std::pair<int, double>>> adj(nodeCount);
  for (const TreeEdge& e : edges) {
    require(e.a >= 0 && e.a < nodeCount && e.b >= 0 && e.b < nodeCount &&
                e.a != e.b,
            ErrorKind::InvalidSpec, "tree edge endpoints out of range");
    require(e.length > 0.0, ErrorKind::InvalidSpec,
            "tree edge lengths must be positive");
    adj[e.a].push_back({e.b, e.length});
    adj[e.b].push_back({e.a, e.length});
  }

  nodeDistanceTable.assign(static_cast<size_t>(nodeCount) * nodeCount, 0.0);
  nextHopTable.assign(static_cast<size_t>(nodeCount) * nodeCount, -1);
  std::vector<int> stack;
  std::vector<char> seen(nodeCount);
  for (int root = 0; root < nodeCount; ++root) {
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, root);
    seen[root] = 1;
    nextHopTable[root * nodeCount + root] = root;
    int visited = 0;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      ++visited;
      for (auto [w, len] : adj[v]) {
        if (seen[w]) continue;
        seen[w] = 1;
        nodeDistanceTable[root * nodeCount + w] =
            nodeDistanceTable[root * nodeCount + v] + len;
        nextHopTable[root * nodeCount + w] =
            v == root ? w : nextHopTable[root * nodeCount + v];
        stack.push_back(w);
      }
    }
    require(visited == nodeCount, ErrorKind::Topology, "tree is not connected");
  }
}

MetricTree MetricTree::tripod(double leg1, double leg2, double leg3) {
  MetricTree t;
  t.nodeCount = 4;
  t.edges = {{0, 1, leg1}, {0, 2, leg2}, {0, 3, leg3}};
  t.finalize();
  return t;
}

// --- NpcTarget ---------------------------------------------------------------

NpcTarget NpcTarget::euclidean(int dim) {
  require(dim >= 1, ErrorKind::InvalidSpec,
          "euclidean target dimension must be >= 1");
  NpcTarget t;
  t.kind_ = Kind::Euclidean;
  t.dim_ = dim;
  return t;
}

NpcTarget NpcTarget::hyperbolicPlane() {
  NpcTarget t;
  t.kind_ = Kind::Hyperbolic;
  return t;
}

NpcTarget NpcTarget::tree(MetricTree tree) {
  if (tree.nodeDistanceTable.empty()) tree.finalize();
  NpcTarget t;
  t.kind_ = Kind::Tree;
  t.tree_ = std::move(tree);
  return t;
}

const MetricTree& NpcTarget::treeData() const {
  require(kind_ == Kind::Tree, ErrorKind::Inconsistency,
          "target is not a metric tree");
  return tree_;
}

void NpcTarget::validate(const TargetPoint& p) const {
  switch (kind_) {
    case Kind::Euclidean: {
      const auto* e = std::get_if<EuclideanPoint>(&p);
      require(e != nullptr, ErrorKind::Inconsistency,
              "point kind does not match the euclidean target");
      require(static_cast<int>(e->x.size()) == dim_, ErrorKind::Inconsistency,
              "euclidean point dimension mismatch");
      return;
    }
    case Kind::Hyperbolic: {
      const auto* h = std::get_if<HyperbolicPoint>(&p);
      require(h != nullptr, ErrorKind::Inconsistency,
              "point kind does not match the hyperbolic target");
      const double q = h->x[0] * h->x[0] - h->x[1] * h->x[1] - h->x[2] * h->x[2];
      require(h->x[0] > 0.0 && std::abs(q - 1.0) < 1e-8, ErrorKind::OutOfDomain,
              "point is off the hyperboloid sheet");
      return;
    }
    case Kind::Tree: {
      const auto* t = std::get_if<TreePoint>(&p);
      require(t != nullptr, ErrorKind::Inconsistency,
              "point kind does not match the tree target");
      require(t->edge >= 0 && t->edge < static_cast<int>(tree_.edges.size()),
              ErrorKind::OutOfDomain, "tree point edge id out of range");
      const double len = tree_.edges[t->edge].length;
      require(t->offset >= -1e-12 && t->offset <= len + 1e-12,
              ErrorKind::OutOfDomain, "tree point offset outside its edge");
      return;
    }
  }
}

double NpcTarget::distance(const TargetPoint& p, const TargetPoint& q) const {
  switch (kind_) {
    case Kind::Euclidean: {
      const auto& a = std::get<EuclideanPoint>(p).x;
      const auto& b = std::get<EuclideanPoint>(q).x;
      double s = 0.0;
      for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case Kind::Hyperbolic:
      return hypDistance(std::get<HyperbolicPoint>(p),
                         std::get<HyperbolicPoint>(q));
    case Kind::Tree: {
      const auto& a = std::get<TreePoint>(p);
      const auto& b = std::get<TreePoint>(q);
      if (a.edge == b.edge) return std::abs(a.offset - b.offset);
      const auto& ea = tree_.edges[a.edge];
      const auto& eb = tree_.edges[b.edge];
      const double fromA[2] = {a.offset, ea.length - a.offset};
      const double toB[2] = {b.offset, eb.length - b.offset};
      const int na[2] = {ea.a, ea.b}, nb[2] = {eb.a, eb.b};
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          best = std::min(best,
                          fromA[i] + tree_.nodeDistance(na[i], nb[j]) + toB[j]);
        }
      }
      return best;
    }
  }
  return 0.0;
}

TargetPoint NpcTarget::geodesicPoint(const TargetPoint& p, const TargetPoint& q,
                                     double s) const {
  require(s >= 0.0 && s <= 1.0, ErrorKind::Parameter,
          "geodesic parameter must lie in [0, 1]");
  switch (kind_) {
    case Kind::Euclidean: {
      const auto& a = std::get<EuclideanPoint>(p).x;
      const auto& b = std::get<EuclideanPoint>(q).x;
      EuclideanPoint out;
      out.x.resize(a.size());
      for (size_t i = 0; i < a.size(); ++i) out.x[i] = a[i] + s * (b[i] - a[i]);
      return out;
    }
    case Kind::Hyperbolic:
      return hypGeodesic(std::get<HyperbolicPoint>(p),
                         std::get<HyperbolicPoint>(q), s);
    case Kind::Tree: {
      const auto& a = std::get<TreePoint>(p);
      const auto& b = std::get<TreePoint>(q);
      const double total = distance(p, q);
      if (total == 0.0) return p;
      double remaining = s * total;
      if (a.edge == b.edge) {
        const double dir = b.offset >= a.offset ? 1.0 : -1.0;
        return TreePoint{a.edge, a.offset + dir * remaining};
      }
      const auto& ea = tree_.edges[a.edge];
      const auto& eb = tree_.edges[b.edge];
      // Route through the endpoint pair realizing the distance (first of the
      // four combinations in fixed order, for determinism).
      const double fromA[2] = {a.offset, ea.length - a.offset};
      const double toB[2] = {b.offset, eb.length - b.offset};
      const int na[2] = {ea.a, ea.b}, nb[2] = {eb.a, eb.b};
      int bi = 0, bj = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double v = fromA[i] + tree_.nodeDistance(na[i], nb[j]) + toB[j];
          if (v < best - 1e-15) {
            best = v;
            bi = i;
            bj = j;
          }
        }
      }
      // Segment 1: along the source edge to its chosen endpoint.
      if (remaining <= fromA[bi]) {
        const double dir = bi == 0 ? -1.0 : 1.0;
        return TreePoint{a.edge, a.offset + dir * remaining};
      }
      remaining -= fromA[bi];
      // Node path.
      int cur = na[bi];
      const int goal = nb[bj];
      while (cur != goal) {
        const int next = tree_.nextHop(cur, goal);
        int edgeId = -1;
        bool forward = true;
        for (int e = 0; e < static_cast<int>(tree_.edges.size()); ++e) {
          if (tree_.edges[e].a == cur && tree_.edges[e].b == next) {
            edgeId = e;
            forward = true;
            break;
          }
          if (tree_.edges[e].b == cur && tree_.edges[e].a == next) {
            edgeId = e;
            forward = false;
            break;
          }
        }
        require(edgeId >= 0, ErrorKind::Topology, "broken tree routing table");
        const double len = tree_.edges[edgeId].length;
        if (remaining <= len) {
          return TreePoint{edgeId, forward ? remaining : len - remaining};
        }
        remaining -= len;
        cur = next;
      }
      // Segment 3: along the destination edge from its chosen endpoint.
      const double len = eb.length;
      const double off = bj == 0 ? remaining : len - remaining;
      return TreePoint{b.edge, std::clamp(off, 0.0, len)};
    }
  }
  return p;
}

TargetPoint NpcTarget::weightedBarycenter(const std::vector<TargetPoint>& points,
                                          const std::vector<double>& weights,
                                          double tol) const {
  require(!points.empty(), ErrorKind::DegenerateInput,
          "barycenter of an empty set");
  require(points.size() == weights.size(), ErrorKind::Inconsistency,
          "barycenter needs one weight per point");
  double W = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorKind::DegenerateInput,
            "barycenter weights must be nonnegative");
    W += w;
  }
  require(W > 0.0, ErrorKind::DegenerateInput,
          "barycenter weights must not all vanish");

  switch (kind_) {
    case Kind::Euclidean: {
      EuclideanPoint out;
      out.x.assign(dim_, 0.0);
      for (size_t i = 0; i < points.size(); ++i) {
        const auto& x = std::get<EuclideanPoint>(points[i]).x;
        for (int d = 0; d < dim_; ++d) out.x[d] += weights[i] * x[d];
      }
      for (int d = 0; d < dim_; ++d) out.x[d] /= W;
      return out;
    }
    case Kind::Hyperbolic: {
      // Riemannian center of mass by intrinsic fixed-point iteration
      // q <- exp_q(mean of log_q(p_i)); the objective is 2-strongly
      // geodesically convex, so the displacement contracts geometrically.
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (size_t i = 0; i < points.size(); ++i) {
        const auto& x = std::get<HyperbolicPoint>(points[i]).x;
        for (int d = 0; d < 3; ++d) acc[d] += weights[i] * x[d];
      }
      HyperbolicPoint q = hypNormalize(acc);
      const long cap = 100000;
      for (long iter = 0; iter < cap; ++iter) {
        std::array<double, 3> step{0.0, 0.0, 0.0};
        for (size_t i = 0; i < points.size(); ++i) {
          const auto v = hypLog(q, std::get<HyperbolicPoint>(points[i]));
          for (int d = 0; d < 3; ++d) step[d] += weights[i] * v[d];
        }
        for (int d = 0; d < 3; ++d) step[d] /= W;
        const double n2 =
            step[1] * step[1] + step[2] * step[2] - step[0] * step[0];
        q = hypExp(q, step);
        if (n2 <= tol * tol) return q;
      }
      fail(ErrorKind::Parameter, "barycenter iteration exceeded its cap");
    }
    case Kind::Tree: {
      // The objective restricted to one edge is piecewise quadratic and
      // convex, so minimize exactly edge by edge and keep the best.
      const int E = static_cast<int>(tree_.edges.size());
      const int P = static_cast<int>(points.size());
      static thread_local std::vector<double> distA, distB, breaks;
      distA.resize(P);
      distB.resize(P);
      double bestVal = std::numeric_limits<double>::infinity();
      TreePoint bestPoint{0, 0.0};
      for (int e = 0; e < E; ++e) {
        const auto& edge = tree_.edges[e];
        const double L = edge.length;
        breaks.clear();
        breaks.push_back(0.0);
        breaks.push_back(L);
        for (int i = 0; i < P; ++i) {
          const auto& pt = std::get<TreePoint>(points[i]);
          if (pt.edge == e) {
            distA[i] = pt.offset;        // used as the kink location marker
            distB[i] = -1.0;             // flags "on this edge"
            if (pt.offset > 0.0 && pt.offset < L) breaks.push_back(pt.offset);
          } else {
            const auto& pe = tree_.edges[pt.edge];
            distA[i] = std::min(tree_.nodeDistance(edge.a, pe.a) + pt.offset,
                                tree_.nodeDistance(edge.a, pe.b) + pe.length -
                                    pt.offset);
            distB[i] = std::min(tree_.nodeDistance(edge.b, pe.a) + pt.offset,
                                tree_.nodeDistance(edge.b, pe.b) + pe.length -
                                    pt.offset);
            const double sw = 0.5 * (L + distB[i] - distA[i]);
            if (sw > 0.0 && sw < L) breaks.push_back(sw);
          }
        }
        std::sort(breaks.begin(), breaks.end());
        for (size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
          const double lo = breaks[seg], hi = breaks[seg + 1];
          if (hi <= lo) continue;
          const double mid = 0.5 * (lo + hi);
          // F(t) = sum w (alpha + sigma t)^2 on [lo, hi].
          double A = 0.0, B = 0.0, C = 0.0;
          for (int i = 0; i < P; ++i) {
            double alpha, sigma;
            if (distB[i] < 0.0) {
              const double ti = distA[i];
              if (mid >= ti) {
                alpha = -ti;
                sigma = 1.0;
              } else {
                alpha = ti;
                sigma = -1.0;
              }
            } else if (mid + distA[i] <= L - mid + distB[i]) {
              alpha = distA[i];
              sigma = 1.0;
            } else {
              alpha = L + distB[i];
              sigma = -1.0;
            }
            A += weights[i];
            B += 2.0 * weights[i] * alpha * sigma;
            C += weights[i] * alpha * alpha;
          }
          const double that = std::clamp(-B / (2.0 * A), lo, hi);
          const double val = (A * that + B) * that + C;
          if (val + 1e-15 * (1.0 + std::abs(val)) < bestVal) {
            bestVal = val;
            bestPoint = TreePoint{e, that};
          }
        }
      }
      return bestPoint;
    }
  }
  return points.front();
}

double NpcTarget::quadrupleResidual(const TargetPoint& p, const TargetPoint& q,
                                    const TargetPoint& r,
                                    const TargetPoint& s) const {
  const TargetPoint qm = geodesicPoint(q, r, 0.5);
  const double dps = distance(p, s), dqr = distance(q, r);
  const double dpqm = distance(p, qm), dpq = distance(p, q);
  const double dqmq = distance(qm, q), dsqm = distance(s, qm);
  const double dsr = distance(s, r), dqmr = distance(qm, r);
  const double lhs = (dps - dqr) * dqr;
  const double rhs = (dpqm * dpqm - dpq * dpq - dqmq * dqmq) +
                     (dsqm * dsqm - dsr * dsr - dqmr * dqmr);
  return lhs - rhs;
}

double NpcTarget::oscillation(const std::vector<TargetPoint>& points) const {
  if (points.size() < 2) return 0.0;
  if (kind_ == Kind::Euclidean && dim_ == 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
      const double v = std::get<EuclideanPoint>(p).x[0];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  }
  if (kind_ == Kind::Tree) {
    // Diameter of a finite subset of a metric tree via two farthest-point
    // sweeps (valid in any real tree).
    auto farthest = [&](const TargetPoint& from) {
      size_t arg = 0;
      double best = -1.0;
      for (size_t i = 0; i < points.size(); ++i) {
        const double d = distance(from, points[i]);
        if (d > best) {
          best = d;
          arg = i;
        }
      }
      return std::make_pair(arg, best);
    };
    const auto [a, da] = farthest(points[0]);
    return farthest(points[a]).second;
  }
  double best = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, distance(points[i], points[j]));
    }
  }
  return best;
}

TargetPoint NpcTarget::samplePoint(std::uint64_t& rngState) const {
  switch (kind_) {
    case Kind::Euclidean: {
      EuclideanPoint p;
      p.x.resize(dim_);
      for (int d = 0; d < dim_; ++d) p.x[d] = 2.0 * uniform01(rngState) - 1.0;
      return p;
    }
    case Kind::Hyperbolic: {
      const double x1 = 3.0 * uniform01(rngState) - 1.5;
      const double x2 = 3.0 * uniform01(rngState) - 1.5;
      return HyperbolicPoint{
          {std::sqrt(1.0 + x1 * x1 + x2 * x2), x1, x2}};
    }
    case Kind::Tree: {
      const int e = static_cast<int>(splitmix64(rngState) %
                                     tree_.edges.size());
      return TreePoint{e, uniform01(rngState) * tree_.edges[e].length};
    }
  }
  return scalarPoint(0.0);
}

TreePoint NpcTarget::nodePoint(int node) const {
  require(kind_ == Kind::Tree, ErrorKind::Inconsistency,
          "node points exist only for tree targets");
  require(node >= 0 && node < tree_.nodeCount, ErrorKind::OutOfDomain,
          "tree node id out of range");
  for (int e = 0; e < static_cast<int>(tree_.edges.size()); ++e) {
    if (tree_.edges[e].a == node) return TreePoint{e, 0.0};
    if (tree_.edges[e].b == node) return TreePoint{e, tree_.edges[e].length};
  }
  fail(ErrorKind::Topology, "isolated tree node");
}

TargetPoint scalarPoint(double v) { return EuclideanPoint{{v}}; }

double scalarValue(const TargetPoint& p) {
  const auto* e = std::get_if<EuclideanPoint>(&p);
  require(e != nullptr && e->x.size() == 1, ErrorKind::Inconsistency,
          "point is not scalar");
  return e->x[0];
}

}  // namespace harmlab
