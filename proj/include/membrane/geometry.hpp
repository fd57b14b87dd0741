#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "membrane/bfs_basis.hpp"
#include "membrane/gauss.hpp"
#include "membrane/grid.hpp"

namespace membrane {

class GeometryError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Boundary data as a function of the curve parameter theta.
using CurveData = std::function<double(double)>;

inline CurveData constant_data(double v) {
  return [v](double) { return v; };
}

enum class ShapeKind { circle, ellipse };

/// A particle B_i. The shape is the ellipse c + R(angle) (a cos t, b sin t);
/// circles have a == b. An exterior particle occupies the closed complement
/// of that ellipse (used to model a clamped outer circle inside the box).
struct Particle {
  ShapeKind kind = ShapeKind::circle;
  Point2 center;
  double a = 1.0;
  double b = 1.0;
  double angle = 0.0;
  bool exterior = false;
  bool variable_height = true;
  CurveData f1 = constant_data(0.0);  ///< height profile on the boundary
  CurveData f2 = constant_data(0.0);  ///< slope along the normal pointing out of B_i

  [[nodiscard]] static Particle circle(Point2 c, double r) {
    if (!(r > 0.0)) {
      throw GeometryError("circle radius must be positive");
    }
    Particle p;
    p.kind = ShapeKind::circle;
    p.center = c;
    p.a = r;
    p.b = r;
    return p;
  }

  [[nodiscard]] static Particle ellipse(Point2 c, double a, double b, double angle) {
    if (!(a > 0.0) || !(b > 0.0)) {
      throw GeometryError("ellipse semi-axes must be positive");
    }
    Particle p;
    p.kind = ShapeKind::ellipse;
    p.center = c;
    p.a = a;
    p.b = b;
    p.angle = angle;
    return p;
  }

  /// Coordinates in the frame where the ellipse is the unit circle.
  [[nodiscard]] Point2 to_unit(Point2 x) const {
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const Point2 d = x - center;
    return {(cs * d.x + sn * d.y) / a, (-sn * d.x + cs * d.y) / b};
  }

  [[nodiscard]] Point2 from_unit(Point2 xi) const {
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const double u = a * xi.x;
    const double v = b * xi.y;
    return {center.x + cs * u - sn * v, center.y + sn * u + cs * v};
  }

  /// Squared normalized radius; 1 on the curve.
  [[nodiscard]] double radius2(Point2 x) const {
    const Point2 xi = to_unit(x);
    return xi.x * xi.x + xi.y * xi.y;
  }

  /// Signed implicit function, negative in the interior of B_i.
  [[nodiscard]] double level(Point2 x) const {
    const double s = radius2(x) - 1.0;
    return exterior ? -s : s;
  }

  /// Closed-set membership.
  [[nodiscard]] bool contains(Point2 x) const { return level(x) <= 0.0; }

  [[nodiscard]] Rect bounding_box() const {
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const double ex = std::hypot(a * cs, b * sn);
    const double ey = std::hypot(a * sn, b * cs);
    return {center.x - ex, center.x + ex, center.y - ey, center.y + ey};
  }
};

/// Point on a particle boundary with the normal pointing out of B_i and the
/// arc-length density d(sigma)/d(theta).
struct CurvePoint {
  Point2 position;
  Point2 normal;
  double weight = 0.0;
};

inline CurvePoint boundary_point(const Particle& p, double theta) {
  const double cs = std::cos(p.angle);
  const double sn = std::sin(p.angle);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  CurvePoint out;
  out.position = p.from_unit({ct, st});
  const Point2 tangent{-p.a * st * cs - p.b * ct * sn, -p.a * st * sn + p.b * ct * cs};
  out.weight = norm(tangent);
  if (!(out.weight > 0.0)) {
    throw GeometryError("degenerate particle boundary");
  }
  Point2 n{tangent.y / out.weight, -tangent.x / out.weight};
  if (p.exterior) {
    n = -1.0 * n;
  }
  out.normal = n;
  return out;
}

/// Region label: the membrane or the index of a particle.
struct Region {
  int particle = -1;

  [[nodiscard]] static Region membrane() { return {}; }
  [[nodiscard]] static Region of_particle(int i) { return {i}; }
  [[nodiscard]] bool is_membrane() const { return particle < 0; }
  friend bool operator==(Region, Region) = default;
};

/// Points on a particle boundary belong to the (closed) particle.
inline Region classify_point(const std::vector<Particle>& particles, Point2 x) {
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (particles[i].contains(x)) {
      return Region::of_particle(static_cast<int>(i));
    }
  }
  return Region::membrane();
}

/// Checks that particles lie strictly inside the domain and do not overlap.
/// Overlap is tested on sampled boundary points.
inline void validate_particles(const std::vector<Particle>& particles, const Rect& domain) {
  constexpr int samples = 256;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Particle& p = particles[i];
    const Rect box = p.bounding_box();
    if (!(box.xmin > domain.xmin && box.xmax < domain.xmax && box.ymin > domain.ymin &&
          box.ymax < domain.ymax)) {
      throw GeometryError("particle " + std::to_string(i) + " is not strictly inside the domain");
    }
    for (std::size_t j = 0; j < particles.size(); ++j) {
      if (j == i) {
        continue;
      }
      for (int s = 0; s < samples; ++s) {
        const double t = 2.0 * std::numbers::pi * s / samples;
        if (particles[j].level(boundary_point(p, t).position) <= 0.0) {
          throw GeometryError("particles " + std::to_string(i) + " and " + std::to_string(j) +
                              " overlap");
        }
      }
    }
  }
}

/// Quadrature over a whole particle boundary with n equispaced parameters.
struct CurveQuadrature {
  std::vector<double> theta;
  std::vector<CurvePoint> points;
  std::vector<double> weights;  ///< arc-length weights

  [[nodiscard]] double length() const {
    double s = 0.0;
    for (double w : weights) {
      s += w;
    }
    return s;
  }
};

inline CurveQuadrature curve_quadrature_on_arc(const Particle& p, double t0, double t1, int n) {
  CurveQuadrature q;
  const Rule1D rule = trig_gauss(t0, t1, n);
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const CurvePoint cp = boundary_point(p, rule.nodes[j]);
    q.theta.push_back(rule.nodes[j]);
    q.points.push_back(cp);
    q.weights.push_back(rule.weights[j] * cp.weight);
  }
  return q;
}

inline CurveQuadrature full_curve_quadrature(const Particle& p, int n) {
  return curve_quadrature_on_arc(p, 0.0, 2.0 * std::numbers::pi, n);
}

/// Mean height offsets gamma_i = |dB_i|^-1 * integral of (u - f1) over dB_i,
/// one per variable-height particle, in particle order.
inline std::vector<double> recover_heights(const BfsSpace& space, const Eigen::VectorXd& coeffs,
                                           const std::vector<Particle>& particles,
                                           int curve_points = 256) {
  std::vector<double> gamma;
  for (const Particle& p : particles) {
    if (!p.variable_height) {
      continue;
    }
    const CurveQuadrature q = full_curve_quadrature(p, curve_points);
    double integral = 0.0;
    for (std::size_t j = 0; j < q.points.size(); ++j) {
      const double u = evaluate(space, coeffs, q.points[j].position).value;
      integral += q.weights[j] * (u - p.f1(q.theta[j]));
    }
    gamma.push_back(integral / q.length());
  }
  return gamma;
}

}  // namespace membrane
