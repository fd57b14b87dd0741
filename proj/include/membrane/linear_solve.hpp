#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "membrane/assembly.hpp"

namespace membrane {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  int refinement_steps = 0;
  double relative_residual = 0.0;
};

/// Sparse Cholesky of the base matrix with a Woodbury correction for the
/// rank-one terms. solve() applies iterative refinement against the full
/// operator.
class Factorization {
public:
  explicit Factorization(const AssembledSystem& sys, int max_refinement = 8)
      : sys_(&sys), max_refinement_(max_refinement) {
    llt_.compute(sys.base);
    if (llt_.info() != Eigen::Success) {
      throw SolverError("sparse Cholesky failed: base matrix is not positive definite");
    }
    const auto k = static_cast<long>(sys.lowrank.size());
    if (k == 0) {
      return;
    }
    u_.resize(sys.base.rows(), k);
    Eigen::VectorXd sinv(k);
    for (long j = 0; j < k; ++j) {
      const LowRankTerm& t = sys.lowrank[static_cast<std::size_t>(j)];
      if (!(t.coeff > 0.0)) {
        throw SolverError("rank-one coefficient must be positive");
      }
      u_.col(j) = t.v;
      sinv[j] = 1.0 / (t.sign * t.coeff);
    }
    z_ = llt_.solve(u_);
    Eigen::MatrixXd cap = u_.transpose() * z_;
    cap.diagonal() += sinv;
    cap_.compute(cap);
    if (!cap_.isInvertible()) {
      throw SolverError("singular Woodbury capacitance matrix");
    }
  }

  /// One Woodbury application, no refinement.
  [[nodiscard]] Eigen::VectorXd apply_inverse(const Eigen::VectorXd& r) const {
    Eigen::VectorXd x = llt_.solve(r);
    if (u_.cols() > 0) {
      const Eigen::VectorXd y = cap_.solve(u_.transpose() * x);
      x -= z_ * y;
    }
    return x;
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs, SolveReport* report = nullptr) const {
    SolveReport rep;
    const double rn = rhs.norm();
    if (rn == 0.0) {
      if (report != nullptr) {
        *report = rep;
      }
      return Eigen::VectorXd::Zero(rhs.size());
    }
    Eigen::VectorXd x = apply_inverse(rhs);
    Eigen::VectorXd res = rhs - sys_->apply(x);
    rep.relative_residual = res.norm() / rn;
    while (rep.refinement_steps < max_refinement_ && rep.relative_residual > 1e-14) {
      const Eigen::VectorXd x_new = x + apply_inverse(res);
      const Eigen::VectorXd res_new = rhs - sys_->apply(x_new);
      const double rel = res_new.norm() / rn;
      ++rep.refinement_steps;
      if (!(rel < rep.relative_residual)) {
        break;
      }
      x = x_new;
      res = res_new;
      rep.relative_residual = rel;
    }
    if (report != nullptr) {
      *report = rep;
    }
    return x;
  }

private:
  const AssembledSystem* sys_;
  int max_refinement_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd z_;
  Eigen::FullPivLU<Eigen::MatrixXd> cap_;
};

inline Eigen::VectorXd solve(const AssembledSystem& sys, SolveReport* report = nullptr) {
  const Factorization f(sys);
  return f.solve(sys.rhs, report);
}

/// Free-DOF solution expanded to all DOFs with Dirichlet zeros.
inline Eigen::VectorXd expand_solution(const BfsSpace& space, const Eigen::VectorXd& free) {
  Eigen::VectorXd full;
  space.dofs.expand(free, full);
  return full;
}

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients on the full operator (matrix-free
/// rank-one terms), incomplete Cholesky of the base as preconditioner.
inline Eigen::VectorXd solve_cg(const AssembledSystem& sys, double tol = 1e-10, long max_iter = 0,
                                CgReport* report = nullptr) {
  const long n = sys.base.rows();
  if (max_iter <= 0) {
    max_iter = 10 * n;
  }
  CgReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bn = sys.rhs.norm();
  if (bn == 0.0) {
    rep.converged = true;
    if (report != nullptr) {
      *report = rep;
    }
    return x;
  }
  Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> ic;
  ic.compute(sys.base);
  if (ic.info() != Eigen::Success) {
    throw SolverError("incomplete Cholesky preconditioner failed");
  }
  Eigen::VectorXd r = sys.rhs;
  Eigen::VectorXd z = ic.solve(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd q = sys.apply(p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      throw SolverError("operator is not positive definite");
    }
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    rep.iterations = static_cast<int>(it + 1);
    // Recompute the true residual now and then to avoid drift.
    if ((it + 1) % 50 == 0) {
      r = sys.rhs - sys.apply(x);
    }
    rep.relative_residual = r.norm() / bn;
    if (rep.relative_residual <= tol) {
      const double true_rel = (sys.rhs - sys.apply(x)).norm() / bn;
      if (true_rel <= tol) {
        rep.relative_residual = true_rel;
        rep.converged = true;
        break;
      }
      r = sys.rhs - sys.apply(x);
    }
    z = ic.solve(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (report != nullptr) {
    *report = rep;
  }
  return x;
}

/// Dense LDLT of base + rank-one terms; oracle for small systems.
inline Eigen::VectorXd solve_dense(const AssembledSystem& sys) {
  const Eigen::MatrixXd m = sys.dense();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SolverError("dense operator is not positive definite");
  }
  return ldlt.solve(sys.rhs);
}

}  // namespace membrane
