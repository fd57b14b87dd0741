#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "membrane/geometry.hpp"

using namespace membrane;

namespace {

const double kPi = std::numbers::pi;

}  // namespace

TEST(Geometry, ClassifyPoint) {
  const std::vector<Particle> ps{Particle::circle({0.0, 0.0}, 1.0 / 3.0)};
  EXPECT_EQ(classify_point(ps, {0.0, 0.0}), Region::of_particle(0));
  EXPECT_EQ(classify_point(ps, {0.5, 0.5}), Region::membrane());
  EXPECT_EQ(classify_point(ps, {1.0 / 3.0, 0.0}), Region::of_particle(0));
}

TEST(Geometry, ExteriorParticleInvertsContainment) {
  Particle p = Particle::circle({0.0, 0.0}, 2.0 / 3.0);
  p.exterior = true;
  EXPECT_FALSE(p.contains({0.0, 0.0}));
  EXPECT_TRUE(p.contains({0.9, 0.0}));
  EXPECT_TRUE(p.contains({2.0 / 3.0, 0.0}));
}

TEST(Geometry, BoundaryPoints) {
  const Particle c = Particle::circle({0.0, 0.0}, 1.0 / 3.0);
  const CurvePoint a = boundary_point(c, 0.0);
  EXPECT_NEAR(a.position.x, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.position.y, 0.0, 1e-15);
  EXPECT_NEAR(a.weight, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.normal.x, 1.0, 1e-15);

  const Particle e = Particle::ellipse({0.3, -0.2}, 0.2, 0.1, 0.0);
  const CurvePoint b = boundary_point(e, kPi / 2.0);
  EXPECT_NEAR(b.position.x, 0.3, 1e-15);
  EXPECT_NEAR(b.position.y, -0.1, 1e-15);
  EXPECT_NEAR(norm(b.normal), 1.0, 1e-15);
}

TEST(Geometry, ExteriorNormalPointsOutOfTheParticle) {
  Particle p = Particle::circle({0.0, 0.0}, 0.5);
  p.exterior = true;
  const CurvePoint a = boundary_point(p, 0.0);
  EXPECT_NEAR(a.normal.x, -1.0, 1e-15);
}

TEST(Geometry, Perimeters) {
  const Particle c = Particle::circle({0.1, 0.0}, 1.0 / 3.0);
  EXPECT_NEAR(full_curve_quadrature(c, 64).length(), 2.0 * kPi / 3.0, 1e-10);
  // Complete elliptic integral 4 a E(1 - b^2/a^2) evaluated in high precision.
  const Particle e = Particle::ellipse({0.0, 0.0}, 0.2, 0.1, 0.7);
  EXPECT_NEAR(full_curve_quadrature(e, 64).length(), 0.968844822054767673624541756342, 1e-8);
}

TEST(Geometry, ImplicitAndParametricAgree) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t(0.0, 2.0 * kPi);
  const std::vector<Particle> ps{Particle::ellipse({0.1, 0.2}, 0.3, 0.12, 0.4),
                                 Particle::circle({-0.4, -0.3}, 0.2)};
  for (const Particle& p : ps) {
    for (int k = 0; k < 500; ++k) {
      const CurvePoint cp = boundary_point(p, t(rng));
      EXPECT_TRUE(p.contains(cp.position - 1e-6 * cp.normal));
      EXPECT_FALSE(p.contains(cp.position + 1e-6 * cp.normal));
    }
  }
}

TEST(Geometry, ValidateParticles) {
  const Rect box{-1.0, 1.0, -1.0, 1.0};
  EXPECT_NO_THROW(validate_particles({Particle::circle({0.0, 0.0}, 0.3)}, box));
  EXPECT_THROW(validate_particles({Particle::circle({0.9, 0.0}, 0.3)}, box), GeometryError);
  EXPECT_THROW(validate_particles({Particle::circle({0.0, 0.0}, 0.3), Particle::circle({0.4, 0.0}, 0.3)}, box),
               GeometryError);
  EXPECT_THROW(Particle::ellipse({0.0, 0.0}, 0.0, 0.1, 0.0), GeometryError);
}

TEST(Geometry, RecoverHeights) {
  const BfsSpace space(unit_box_grid(8));
  Particle p = Particle::circle({0.0, 0.0}, 1.0 / 3.0);
  p.f1 = [](double t) { return std::cos(4.0 * t); };
  const std::vector<Particle> ps{p};
  // u = 5 everywhere: gamma = mean(5 - cos 4t) = 5.
  const Eigen::VectorXd five = interpolate(
      [](Point2) {
        FieldSample s;
        s.value = 5.0;
        return s;
      },
      space);
  EXPECT_NEAR(recover_heights(space, five, ps)[0], 5.0, 1e-12);
  // u = 5 + x^3 is bicubic and x^3 has zero mean on the circle: gamma = 5.
  auto cubic = [](Point2 q) {
    FieldSample s;
    s.value = 5.0 + q.x * q.x * q.x;
    s.dx = 3.0 * q.x * q.x;
    return s;
  };
  EXPECT_NEAR(recover_heights(space, interpolate(cubic, space), ps)[0], 5.0, 1e-12);
  Particle fixed = p;
  fixed.variable_height = false;
  EXPECT_TRUE(recover_heights(space, five, {fixed}).empty());
}
