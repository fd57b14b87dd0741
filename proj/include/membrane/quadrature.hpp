#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "membrane/gauss.hpp"
#include "membrane/geometry.hpp"
#include "membrane/grid.hpp"

namespace membrane {

/// Area or curve rule in physical coordinates.
struct QuadRule {
  std::vector<Point2> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
  [[nodiscard]] double measure() const {
    double s = 0.0;
    for (double w : weights) {
      s += w;
    }
    return s;
  }
  void append(const QuadRule& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  }
  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q) {
      s += weights[q] * f(points[q]);
    }
    return s;
  }
};

enum class CutCellMethod { polar, quadtree };

struct QuadratureOptions {
  int quad_order = 5;       ///< Gauss points per axis on full cells
  int cutcell_depth = 8;    ///< quadtree depth
  int curve_points = 13;    ///< trigonometric Gauss nodes per curve arc
  int cutcell_order = 12;   ///< Gauss points per direction in the polar cut rule
  CutCellMethod cutcell_method = CutCellMethod::polar;
};

/// Tensor Gauss-Legendre rule with p points per axis, exact for degree 2p - 1
/// in each variable.
inline QuadRule tensor_gauss(const Rect& cell, int p) {
  const Rule1D& g = gauss_legendre(p);
  QuadRule rule;
  rule.points.reserve(g.size() * g.size());
  rule.weights.reserve(g.size() * g.size());
  const double w = cell.width();
  const double h = cell.height();
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      rule.points.push_back({cell.xmin + w * g.nodes[i], cell.ymin + h * g.nodes[j]});
      rule.weights.push_back(w * h * g.weights[i] * g.weights[j]);
    }
  }
  return rule;
}

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double wrap_angle(double t) {
  double r = std::fmod(t, kTwoPi);
  if (r < 0.0) {
    r += kTwoPi;
  }
  return r;
}

// Parameters where the particle boundary meets the line coordinate = value
// (axis 0: x, axis 1: y). Tangential contact is not a crossing.
inline void line_crossings(const Particle& p, int axis, double value, std::vector<double>& out) {
  const double cs = std::cos(p.angle);
  const double sn = std::sin(p.angle);
  double A = 0.0;
  double B = 0.0;
  double D = 0.0;
  if (axis == 0) {
    A = p.a * cs;
    B = -p.b * sn;
    D = value - p.center.x;
  } else {
    A = p.a * sn;
    B = p.b * cs;
    D = value - p.center.y;
  }
  const double rho = std::hypot(A, B);
  if (std::abs(D) >= rho * (1.0 - 1e-12)) {
    return;
  }
  const double delta = std::atan2(B, A);
  const double acc = std::acos(D / rho);
  out.push_back(wrap_angle(delta + acc));
  out.push_back(wrap_angle(delta - acc));
}

inline void sort_unique_angles(std::vector<double>& t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }),
          t.end());
}

}  // namespace detail

/// Relation of a cell to a particle's closed set.
enum class CellRelation { inside, outside, cut };

inline CellRelation classify_cell(const Particle& p, const Rect& cell) {
  std::vector<double> ts;
  detail::line_crossings(p, 0, cell.xmin, ts);
  detail::line_crossings(p, 0, cell.xmax, ts);
  detail::line_crossings(p, 1, cell.ymin, ts);
  detail::line_crossings(p, 1, cell.ymax, ts);
  const double tol = 1e-13 * std::max(cell.width(), cell.height());
  for (double t : ts) {
    const Point2 x = boundary_point(p, t).position;
    if (x.x >= cell.xmin - tol && x.x <= cell.xmax + tol && x.y >= cell.ymin - tol &&
        x.y <= cell.ymax + tol) {
      return CellRelation::cut;
    }
  }
  const Rect box = p.bounding_box();
  if (box.xmin > cell.xmin && box.xmax < cell.xmax && box.ymin > cell.ymin && box.ymax < cell.ymax) {
    return CellRelation::cut;
  }
  return p.contains(cell.center()) ? CellRelation::inside : CellRelation::outside;
}

/// A parameter interval of a particle boundary lying in one grid cell.
struct CurveSegment {
  std::size_t cell = 0;
  double theta0 = 0.0;
  double theta1 = 0.0;
};

/// Splits the particle boundary at all grid lines. Each arc is assigned to
/// the cell containing its midpoint (ties to the lower-indexed cell).
inline std::vector<CurveSegment> curve_segments(const Particle& p, const RectGrid& grid) {
  std::vector<double> ts;
  const Rect& b = grid.bounds();
  for (int i = 0; i <= grid.nx(); ++i) {
    detail::line_crossings(p, 0, b.xmin + i * grid.hx(), ts);
  }
  for (int j = 0; j <= grid.ny(); ++j) {
    detail::line_crossings(p, 1, b.ymin + j * grid.hy(), ts);
  }
  detail::sort_unique_angles(ts);
  std::vector<CurveSegment> segs;
  if (ts.empty()) {
    const double mid = std::numbers::pi;
    segs.push_back({grid.locate(boundary_point(p, mid).position), 0.0, detail::kTwoPi});
    return segs;
  }
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t0 = ts[k];
    const double t1 = k + 1 < ts.size() ? ts[k + 1] : ts.front() + detail::kTwoPi;
    if (t1 - t0 <= 0.0) {
      continue;
    }
    const double mid = 0.5 * (t0 + t1);
    segs.push_back({grid.locate(boundary_point(p, mid).position), t0, t1});
  }
  return segs;
}

/// Curve rule with attached normals and parameters.
struct CurveRule {
  std::vector<CurvePoint> points;
  std::vector<double> theta;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] double length() const {
    double s = 0.0;
    for (double w : weights) {
      s += w;
    }
    return s;
  }
  void append(const CurveQuadrature& q) {
    points.insert(points.end(), q.points.begin(), q.points.end());
    theta.insert(theta.end(), q.theta.begin(), q.theta.end());
    weights.insert(weights.end(), q.weights.begin(), q.weights.end());
  }
};

/// Trigonometric Gauss rule on the part of the particle boundary inside the
/// closed cell. Empty if the boundary misses the cell.
inline CurveRule curve_rule(const Particle& p, const Rect& cell, int n_points) {
  std::vector<double> ts;
  detail::line_crossings(p, 0, cell.xmin, ts);
  detail::line_crossings(p, 0, cell.xmax, ts);
  detail::line_crossings(p, 1, cell.ymin, ts);
  detail::line_crossings(p, 1, cell.ymax, ts);
  detail::sort_unique_angles(ts);
  CurveRule rule;
  if (ts.empty()) {
    if (cell.contains(boundary_point(p, 0.0).position)) {
      rule.append(full_curve_quadrature(p, n_points));
    }
    return rule;
  }
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t0 = ts[k];
    const double t1 = k + 1 < ts.size() ? ts[k + 1] : ts.front() + detail::kTwoPi;
    if (t1 - t0 <= 0.0) {
      continue;
    }
    if (cell.contains(boundary_point(p, 0.5 * (t0 + t1)).position)) {
      rule.append(curve_quadrature_on_arc(p, t0, t1, n_points));
    }
  }
  return rule;
}

/// Whole-curve rule (trapezoidal in theta, i.e. trigonometric Gauss on the period).
inline CurveRule curve_rule(const Particle& p, int n_points) {
  CurveRule rule;
  rule.append(full_curve_quadrature(p, n_points));
  return rule;
}

namespace detail {

// Integration over cell ∩ {rho <= 1} or cell ∩ {rho >= 1} in the unit frame
// of the particle, using polar coordinates around the particle center. Between
// consecutive breakpoints (polygon vertices and circle/edge intersections)
// the radial limits are smooth functions of the angle.
inline QuadRule polar_cut_rule(const Particle& p, const Rect& cell, bool inner_disc, int order) {
  const std::array<Point2, 4> corners{{{cell.xmin, cell.ymin},
                                       {cell.xmax, cell.ymin},
                                       {cell.xmax, cell.ymax},
                                       {cell.xmin, cell.ymax}}};
  std::array<Point2, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    v[i] = p.to_unit(corners[i]);
  }
  std::array<Point2, 4> normal{};
  std::array<double, 4> offset{};
  std::vector<double> breaks;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 e = v[(i + 1) % 4] - v[i];
    normal[i] = {e.y, -e.x};
    offset[i] = dot(normal[i], v[i]);
    if (norm(v[i]) > 1e-300) {
      breaks.push_back(wrap_angle(std::atan2(v[i].y, v[i].x)));
    }
    const double qa = dot(e, e);
    const double qb = 2.0 * dot(v[i], e);
    const double qc = dot(v[i], v[i]) - 1.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      for (double s : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
        if (s >= 0.0 && s <= 1.0) {
          const Point2 x = v[i] + s * e;
          breaks.push_back(wrap_angle(std::atan2(x.y, x.x)));
        }
      }
    }
  }
  sort_unique_angles(breaks);
  if (breaks.empty()) {
    breaks.push_back(0.0);
  }
  const double jac = p.a * p.b;
  const Rule1D& g = gauss_legendre(order);
  QuadRule rule;
  auto ray_interval = [&](double t, double& lo, double& hi) {
    const Point2 u{std::cos(t), std::sin(t)};
    lo = 0.0;
    hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
      const double nu = dot(normal[i], u);
      if (nu > 0.0) {
        hi = std::min(hi, offset[i] / nu);
      } else if (nu < 0.0) {
        lo = std::max(lo, offset[i] / nu);
      } else if (offset[i] < 0.0) {
        return false;
      }
    }
    return hi > lo;
  };
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    const double t0 = breaks[k];
    const double t1 = k + 1 < breaks.size() ? breaks[k + 1] : breaks.front() + kTwoPi;
    const double dt = t1 - t0;
    if (!(dt > 1e-15)) {
      continue;
    }
    for (std::size_t a = 0; a < g.size(); ++a) {
      const double t = t0 + dt * g.nodes[a];
      double lo = 0.0;
      double hi = 0.0;
      if (!ray_interval(t, lo, hi)) {
        continue;
      }
      const double r0 = inner_disc ? lo : std::max(lo, 1.0);
      const double r1 = inner_disc ? std::min(hi, 1.0) : hi;
      if (!(r1 > r0)) {
        continue;
      }
      const Point2 u{std::cos(t), std::sin(t)};
      for (std::size_t b = 0; b < g.size(); ++b) {
        const double r = r0 + (r1 - r0) * g.nodes[b];
        rule.points.push_back(p.from_unit(r * u));
        rule.weights.push_back(g.weights[a] * dt * g.weights[b] * (r1 - r0) * r * jac);
      }
    }
  }
  return rule;
}

}  // namespace detail

/// Region relation of a rectangle given all particles.
inline CellRelation classify_cell(const std::vector<Particle>& particles, const Rect& cell,
                                  Region region) {
  if (!region.is_membrane()) {
    return classify_cell(particles[static_cast<std::size_t>(region.particle)], cell);
  }
  bool cut = false;
  for (const Particle& p : particles) {
    const CellRelation r = classify_cell(p, cell);
    if (r == CellRelation::inside) {
      return CellRelation::outside;
    }
    cut = cut || r == CellRelation::cut;
  }
  return cut ? CellRelation::cut : CellRelation::inside;
}

namespace detail {

inline void quadtree_collect(const std::vector<Particle>& particles, const Rect& cell, Region region,
                             int depth, int order, QuadRule& out) {
  const CellRelation rel = classify_cell(particles, cell, region);
  if (rel == CellRelation::outside) {
    return;
  }
  if (rel == CellRelation::inside) {
    out.append(tensor_gauss(cell, order));
    return;
  }
  if (depth == 0) {
    const QuadRule leaf = tensor_gauss(cell, order);
    for (std::size_t q = 0; q < leaf.size(); ++q) {
      if (classify_point(particles, leaf.points[q]) == region) {
        out.points.push_back(leaf.points[q]);
        out.weights.push_back(leaf.weights[q]);
      }
    }
    return;
  }
  const Point2 c = cell.center();
  const std::array<Rect, 4> kids{{{cell.xmin, c.x, cell.ymin, c.y},
                                  {c.x, cell.xmax, cell.ymin, c.y},
                                  {cell.xmin, c.x, c.y, cell.ymax},
                                  {c.x, cell.xmax, c.y, cell.ymax}}};
  for (const Rect& k : kids) {
    quadtree_collect(particles, k, region, depth - 1, order, out);
  }
}

}  // namespace detail

/// Robust reference rule: recursive subdivision, Gauss on uncut leaves and
/// point filtering on cut leaves at maximal depth. All weights are positive.
inline QuadRule quadtree_rule(const std::vector<Particle>& particles, const Rect& cell, Region region,
                              int depth, int order) {
  QuadRule rule;
  detail::quadtree_collect(particles, cell, region, depth, order, rule);
  return rule;
}

/// Rule for cell ∩ region (a particle or the membrane). Uncut cells use the
/// tensor rule; cut cells use the polar rule unless more than one particle
/// cuts the cell or the quadtree backend is requested.
inline QuadRule region_rule(const std::vector<Particle>& particles, const Rect& cell, Region region,
                            const QuadratureOptions& opt = {}) {
  const CellRelation rel = classify_cell(particles, cell, region);
  if (rel == CellRelation::outside) {
    return {};
  }
  if (rel == CellRelation::inside) {
    return tensor_gauss(cell, opt.quad_order);
  }
  if (opt.cutcell_method == CutCellMethod::polar) {
    if (!region.is_membrane()) {
      const Particle& p = particles[static_cast<std::size_t>(region.particle)];
      return detail::polar_cut_rule(p, cell, !p.exterior, opt.cutcell_order);
    }
    std::optional<std::size_t> cutter;
    int n_cut = 0;
    for (std::size_t i = 0; i < particles.size(); ++i) {
      if (classify_cell(particles[i], cell) == CellRelation::cut) {
        cutter = i;
        ++n_cut;
      }
    }
    if (n_cut == 1) {
      const Particle& p = particles[*cutter];
      return detail::polar_cut_rule(p, cell, p.exterior, opt.cutcell_order);
    }
  }
  return quadtree_rule(particles, cell, region, opt.cutcell_depth, opt.quad_order);
}

enum class CutSide { particle, membrane };

/// Rule for cell ∩ B (union of particles) or cell ∩ membrane.
inline QuadRule cutcell_rule(const std::vector<Particle>& particles, const Rect& cell, CutSide side,
                             const QuadratureOptions& opt = {}) {
  if (side == CutSide::membrane) {
    return region_rule(particles, cell, Region::membrane(), opt);
  }
  QuadRule rule;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    rule.append(region_rule(particles, cell, Region::of_particle(static_cast<int>(i)), opt));
  }
  return rule;
}

}  // namespace membrane
