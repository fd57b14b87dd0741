#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "membrane/exact_fields.hpp"
#include "membrane/linear_solve.hpp"

using namespace membrane;

namespace {

SparseMatrix identity(long n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

AssembledSystem random_system(long n, int terms, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      r(i, j) = g(rng);
    }
  }
  const Eigen::MatrixXd spd = r.transpose() * r / static_cast<double>(n) + Eigen::MatrixXd::Identity(n, n);
  AssembledSystem sys;
  sys.base = spd.sparseView();
  sys.rhs.resize(n);
  for (long i = 0; i < n; ++i) {
    sys.rhs[i] = g(rng);
  }
  for (int k = 0; k < terms; ++k) {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) {
      v[i] = g(rng);
    }
    // Negative terms keep the full operator positive definite.
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double coeff = sign > 0.0 ? 2.0 : 0.2 / v.squaredNorm();
    sys.lowrank.push_back({sign, coeff, v});
  }
  return sys;
}

AssembledSystem benchmark_system(int n) {
  static const PiecewiseField field = derive_coefficients(BenchmarkParams{});
  const BfsSpace space(unit_box_grid(n));
  ProblemSetup setup;
  setup.particles = symmetric_particles(field.params());
  setup.penalty.formulation = SoftCurve{2.0, 1.0, 1e-3};
  return build_system(space, setup);
}

}  // namespace

TEST(Solve, IdentityExamples) {
  AssembledSystem sys;
  sys.base = identity(3);
  sys.rhs = Eigen::Vector3d(1.0, 2.0, 3.0);
  EXPECT_LT((solve(sys) - sys.rhs).norm(), 1e-15);

  sys.lowrank.push_back({-1.0, 0.5, Eigen::Vector3d(1.0, 0.0, 0.0)});
  sys.rhs = Eigen::Vector3d(1.0, 0.0, 0.0);
  EXPECT_LT((solve(sys) - Eigen::Vector3d(2.0, 0.0, 0.0)).norm(), 1e-14);
}

TEST(Solve, ZeroRhs) {
  AssembledSystem sys;
  sys.base = identity(4);
  sys.rhs = Eigen::VectorXd::Zero(4);
  SolveReport rep;
  EXPECT_EQ(solve(sys, &rep).norm(), 0.0);
  EXPECT_EQ(rep.refinement_steps, 0);
}

TEST(Solve, RejectsIndefiniteBase) {
  AssembledSystem sys;
  sys.base = -1.0 * identity(2);
  sys.rhs = Eigen::VectorXd::Ones(2);
  EXPECT_THROW((void)solve(sys), SolverError);
}

TEST(Solve, SingularCapacitance) {
  AssembledSystem sys;
  sys.base = identity(2);
  sys.rhs = Eigen::VectorXd::Ones(2);
  sys.lowrank.push_back({-1.0, 1.0, Eigen::Vector2d(1.0, 0.0)});
  EXPECT_THROW((void)solve(sys), SolverError);
}

TEST(Solve, WoodburyMatchesDense) {
  std::mt19937_64 rng(21);
  for (long n : {5L, 40L, 200L}) {
    for (int terms : {0, 1, 2, 4}) {
      const AssembledSystem sys = random_system(n, terms, rng);
      const Eigen::VectorXd a = solve(sys);
      const Eigen::VectorXd b = solve_dense(sys);
      EXPECT_LT((a - b).norm(), 1e-10 * b.norm()) << n << ' ' << terms;
    }
  }
}

TEST(Solve, LowRankOrderDoesNotMatter) {
  std::mt19937_64 rng(8);
  AssembledSystem sys = random_system(60, 4, rng);
  const Eigen::VectorXd a = solve(sys);
  std::reverse(sys.lowrank.begin(), sys.lowrank.end());
  std::rotate(sys.lowrank.begin(), sys.lowrank.begin() + 1, sys.lowrank.end());
  EXPECT_LT((solve(sys) - a).norm(), 1e-12 * a.norm());
}

TEST(Solve, FiniteElementSystemRefinement) {
  const AssembledSystem sys = benchmark_system(12);
  SolveReport rep;
  const Eigen::VectorXd u = solve(sys, &rep);
  EXPECT_LT(rep.relative_residual, 1e-12);
  EXPECT_LE(rep.refinement_steps, 8);
  EXPECT_LT((u - solve_dense(sys)).norm(), 1e-8 * u.norm());
}

TEST(Solve, ConjugateGradientsAgree) {
  const AssembledSystem sys = benchmark_system(16);
  const Eigen::VectorXd direct = solve(sys);
  CgReport rep;
  const Eigen::VectorXd cg = solve_cg(sys, 1e-13, 0, &rep);
  EXPECT_TRUE(rep.converged);
  EXPECT_LT((cg - direct).norm(), 1e-8 * direct.norm());
}

TEST(Solve, ExpandSolution) {
  const BfsSpace space(unit_box_grid(3));
  const Eigen::VectorXd free = Eigen::VectorXd::LinSpaced(static_cast<long>(space.dofs.num_free()), 1.0, 16.0);
  const Eigen::VectorXd full = expand_solution(space, free);
  EXPECT_EQ(full.size(), 64);
  EXPECT_DOUBLE_EQ(full.sum(), free.sum());
}
