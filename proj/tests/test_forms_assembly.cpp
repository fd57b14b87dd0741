#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "membrane/assembly.hpp"
#include "membrane/linear_solve.hpp"

using namespace membrane;

namespace {

const double kPi = std::numbers::pi;

// Free coefficients of a field that is exact on cells inside [-0.5, 0.5]^2
// and arbitrary (zero) elsewhere.
Eigen::VectorXd local_field(const BfsSpace& space, const NodalField& g) {
  const Eigen::VectorXd full = interpolate(
      [&g](Point2 p) {
        if (std::abs(p.x) <= 0.5 + 1e-12 && std::abs(p.y) <= 0.5 + 1e-12) {
          return g(p);
        }
        return FieldSample{};
      },
      space);
  Eigen::VectorXd free;
  space.dofs.restrict_to_free(full, free);
  return free;
}

FieldSample linear_x(Point2 p) {
  FieldSample s;
  s.value = p.x;
  s.dx = 1.0;
  return s;
}

FieldSample constant_one(Point2) {
  FieldSample s;
  s.value = 1.0;
  return s;
}

std::vector<Particle> inner_disc(bool variable) {
  Particle p = Particle::circle({0.0, 0.0}, 1.0 / 3.0);
  p.variable_height = variable;
  return {p};
}

double asymmetry(const SparseMatrix& m) {
  return (m - SparseMatrix(m.transpose())).norm() / m.norm();
}

}  // namespace

TEST(Energy, SymmetricPositiveDefinite) {
  const BfsSpace space(unit_box_grid(6));
  const SparseMatrix a = assemble_energy(space, {1.0, 0.5});
  EXPECT_LT(asymmetry(a), 1e-14);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(a)};
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  EXPECT_THROW((void)assemble_energy(space, {0.0, 0.0}), AssemblyError);
}

TEST(Energy, BendingEnergyOfSmoothBump) {
  // w = sin^2(pi x) sin^2(pi y); a(w, w) = int (Lap w)^2 = 3 pi^4 / 2 + ... computed by
  // a fine tensor rule on the exact Laplacian.
  const double pi = kPi;
  auto g = [pi](Point2 p) {
    const double sx = std::sin(pi * p.x);
    const double sy = std::sin(pi * p.y);
    const double s2x = std::sin(2.0 * pi * p.x);
    const double s2y = std::sin(2.0 * pi * p.y);
    const double c2x = std::cos(2.0 * pi * p.x);
    const double c2y = std::cos(2.0 * pi * p.y);
    FieldSample s;
    s.value = sx * sx * sy * sy;
    s.dx = pi * s2x * sy * sy;
    s.dy = pi * sx * sx * s2y;
    s.dxy = pi * pi * s2x * s2y;
    s.dxx = 2.0 * pi * pi * c2x * sy * sy;
    s.dyy = 2.0 * pi * pi * sx * sx * c2y;
    return s;
  };
  double exact = 0.0;
  const RectGrid fine = unit_box_grid(16);
  for (std::size_t c = 0; c < fine.num_cells(); ++c) {
    exact += tensor_gauss(fine.cell_rect(c), 10).integrate([&g](Point2 p) {
      const double l = g(p).laplacian();
      return l * l;
    });
  }
  const BfsSpace space(unit_box_grid(32));
  Eigen::VectorXd w;
  space.dofs.restrict_to_free(interpolate(g, space), w);
  const SparseMatrix a = assemble_energy(space, {1.0, 0.0});
  EXPECT_NEAR(w.dot(a * w) / exact, 1.0, 1e-3);
}

TEST(CurvePenalty, SecondMomentOfCircle) {
  const BfsSpace space(unit_box_grid(8));
  for (bool variable : {false, true}) {
    const FormPart b1 = assemble_curve_penalty(space, inner_disc(variable), 1);
    EXPECT_NEAR(b1.quadratic(local_field(space, linear_x)), kPi / 27.0, 1e-12) << variable;
  }
}

TEST(CurvePenalty, SlopeFormOnLinearField) {
  // dn x = cos t on r = 1/3, so int (dn x)^2 ds = pi / 3.
  const BfsSpace space(unit_box_grid(8));
  const FormPart b2 = assemble_curve_penalty(space, inner_disc(true), 2);
  EXPECT_NEAR(b2.quadratic(local_field(space, linear_x)), kPi / 3.0, 1e-12);
}

TEST(CurvePenalty, MeanProjectionKillsConstants) {
  const BfsSpace space(unit_box_grid(8));
  const Eigen::VectorXd one = local_field(space, constant_one);
  EXPECT_NEAR(assemble_curve_penalty(space, inner_disc(true), 1).quadratic(one), 0.0, 1e-13);
  EXPECT_NEAR(assemble_curve_penalty(space, inner_disc(false), 1).quadratic(one), 2.0 * kPi / 3.0, 1e-12);
}

TEST(CurvePenalty, PositiveSemidefiniteAndSymmetric) {
  const BfsSpace space(unit_box_grid(6));
  const FormPart b1 = assemble_curve_penalty(space, inner_disc(true), 1);
  Eigen::MatrixXd m = Eigen::MatrixXd(b1.sparse);
  for (const LowRankTerm& t : b1.lowrank) {
    m += t.sign * t.coeff * t.v * t.v.transpose();
  }
  EXPECT_LT((m - m.transpose()).norm(), 1e-14 * m.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12 * eig.eigenvalues().maxCoeff());
}

TEST(CurvePenalty, LoadIsLinearInTheData) {
  const BfsSpace space(unit_box_grid(8));
  std::vector<Particle> ps = inner_disc(false);
  ps[0].f1 = [](double t) { return std::cos(4.0 * t); };
  const Eigen::VectorXd r1 = assemble_curve_penalty(space, ps, 1).rhs;
  ps[0].f1 = [](double t) { return 3.0 * std::cos(4.0 * t); };
  const Eigen::VectorXd r3 = assemble_curve_penalty(space, ps, 1).rhs;
  EXPECT_LT((r3 - 3.0 * r1).norm(), 1e-13 * r3.norm());
  EXPECT_THROW((void)assemble_curve_penalty(space, ps, 3), AssemblyError);
}

TEST(CurvePenalty, LoadTestsTheData) {
  // b(w, v) with the data f1 = x on the curve equals b1(w, x-field) for w = x.
  const BfsSpace space(unit_box_grid(8));
  std::vector<Particle> ps = inner_disc(false);
  ps[0].f1 = [](double t) { return std::cos(t) / 3.0; };
  const FormPart b1 = assemble_curve_penalty(space, ps, 1);
  const Eigen::VectorXd w = local_field(space, linear_x);
  EXPECT_NEAR(b1.rhs.dot(w), kPi / 27.0, 1e-12);
}

TEST(BulkPenalty, MassOfLinearField) {
  const BfsSpace space(unit_box_grid(8));
  for (bool variable : {false, true}) {
    const FormPart b = assemble_bulk_penalty(space, inner_disc(variable), 0, {});
    EXPECT_NEAR(b.quadratic(local_field(space, linear_x)), kPi / 324.0, 1e-10) << variable;
  }
}

TEST(BulkPenalty, GradientFormAndHeightTerms) {
  const BfsSpace space(unit_box_grid(8));
  const Eigen::VectorXd x = local_field(space, linear_x);
  const Eigen::VectorXd one = local_field(space, constant_one);
  const FormPart var = assemble_bulk_penalty(space, inner_disc(true), 1, {});
  EXPECT_NEAR(var.quadratic(x), kPi / 9.0, 1e-10);
  EXPECT_NEAR(var.quadratic(one), 0.0, 1e-13);
  // Fixed height adds (int w)^2.
  const FormPart fixed = assemble_bulk_penalty(space, inner_disc(false), 1, {});
  EXPECT_NEAR(fixed.quadratic(one), std::pow(kPi / 9.0, 2), 1e-10);
  const FormPart mass = assemble_bulk_penalty(space, inner_disc(true), 0, {});
  EXPECT_NEAR(mass.quadratic(one), 0.0, 1e-13);
  EXPECT_THROW((void)assemble_bulk_penalty(space, inner_disc(true), 2, {}), AssemblyError);
}

TEST(System, PenaltyScalingAndGalerkinResidual) {
  const BfsSpace space(unit_box_grid(8));
  ProblemSetup setup;
  setup.particles = inner_disc(true);
  setup.particles[0].f1 = [](double t) { return std::cos(4.0 * t); };
  setup.penalty.formulation = SoftCurve{2.0, 1.0, 1e-3};
  const AssembledSystem sys = build_system(space, setup);
  EXPECT_LT(asymmetry(sys.base), 1e-14);
  ASSERT_EQ(sys.lowrank.size(), 1U);
  const double eps1 = 1e-3 * std::pow(0.125, 2.0);
  const FormPart b1 = assemble_curve_penalty(space, setup.particles, 1);
  EXPECT_NEAR(sys.lowrank[0].coeff, b1.lowrank[0].coeff / eps1, 1e-9 * sys.lowrank[0].coeff);
  SolveReport rep;
  const Eigen::VectorXd u = solve(sys, &rep);
  EXPECT_LT((sys.apply(u) - sys.rhs).norm(), 1e-10 * sys.rhs.norm());
}

TEST(System, VanishingPenaltyLeavesTheEnergy) {
  const BfsSpace space(unit_box_grid(6));
  ProblemSetup setup;
  setup.particles = inner_disc(true);
  setup.penalty.formulation = SoftCurve{2.0, 1.0, 1e300};
  const AssembledSystem sys = build_system(space, setup);
  const SparseMatrix a = assemble_energy(space, setup.model);
  EXPECT_LT((sys.base - a).norm(), 1e-12 * a.norm());
}

TEST(System, BulkNeedsFields) {
  const BfsSpace space(unit_box_grid(6));
  ProblemSetup setup;
  setup.particles = inner_disc(true);
  setup.penalty.formulation = SoftBulk{};
  EXPECT_THROW((void)build_system(space, setup), AssemblyError);
  setup.bulk = {[](Point2) { return FieldSample{}; }};
  EXPECT_NO_THROW((void)build_system(space, setup));
}
