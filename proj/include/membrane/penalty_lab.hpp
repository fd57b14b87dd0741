#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace membrane::lab {

class LabError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Finite-dimensional penalty problem on H = R^n with the Euclidean norm.
/// The constraint set is u0 + span(U0); forms are b_i(v, w) = v^T B_i w with
/// B_i = C_i^T C_i, and the discrete space is span(X) (orthonormal columns).
struct AbstractInstance {
  Eigen::MatrixXd A;
  Eigen::VectorXd L;
  std::vector<Eigen::MatrixXd> C;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd u0;
  Eigen::MatrixXd U0;
  Eigen::MatrixXd X;
  Eigen::VectorXd eps;

  [[nodiscard]] long n() const { return A.rows(); }
  [[nodiscard]] std::size_t m() const { return B.size(); }

  [[nodiscard]] Eigen::MatrixXd penalized(const Eigen::MatrixXd& a, const std::vector<Eigen::MatrixXd>& b) const {
    Eigen::MatrixXd out = a;
    for (std::size_t i = 0; i < b.size(); ++i) {
      out += b[i] / eps[static_cast<long>(i)];
    }
    return out;
  }
  [[nodiscard]] Eigen::MatrixXd a_eps() const { return penalized(A, B); }
};

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) {
    return Eigen::MatrixXd(m.rows(), 0);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  const long r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), r);
  return q;
}

/// Orthonormal basis of the joint kernel of the C_i.
inline Eigen::MatrixXd joint_kernel(const std::vector<Eigen::MatrixXd>& c, long n) {
  long rows = 0;
  for (const auto& ci : c) {
    rows += ci.rows();
  }
  if (rows == 0) {
    return Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::MatrixXd stacked(rows, n);
  long r = 0;
  for (const auto& ci : c) {
    stacked.middleRows(r, ci.rows()) = ci;
    r += ci.rows();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
  const double tol = 1e-10 * std::max(1.0, svd.singularValues().size() > 0 ? svd.singularValues()[0] : 1.0);
  long rank = 0;
  for (long k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()[k] > tol) {
      ++rank;
    }
  }
  return svd.matrixV().rightCols(n - rank);
}

struct GeneratorOptions {
  int max_n = 12;
  int max_m = 3;
};

/// Random instance with U0 equal to the joint kernel of the B_i, so the
/// residual of the constrained solution always vanishes where every b_i does.
inline AbstractInstance random_instance(std::mt19937_64& rng, const GeneratorOptions& opt = {}) {
  std::uniform_int_distribution<int> dn(4, opt.max_n);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  AbstractInstance inst;
  const int n = dn(rng);
  const int m = std::uniform_int_distribution<int>(1, opt.max_m)(rng);
  auto gauss = [&](long r, long c) {
    Eigen::MatrixXd g(r, c);
    for (long j = 0; j < c; ++j) {
      for (long i = 0; i < r; ++i) {
        g(i, j) = nd(rng);
      }
    }
    return g;
  };
  const Eigen::MatrixXd g = gauss(n, n);
  inst.A = g.transpose() * g / n + 0.05 * Eigen::MatrixXd::Identity(n, n);
  inst.L = gauss(n, 1);
  int budget = n - 1;
  for (int i = 0; i < m; ++i) {
    const int max_r = std::max(1, std::min(budget - (m - 1 - i), n / 2));
    const int r = std::uniform_int_distribution<int>(1, max_r)(rng);
    budget -= r;
    inst.C.push_back(gauss(r, n));
    inst.B.push_back(inst.C.back().transpose() * inst.C.back());
  }
  inst.U0 = joint_kernel(inst.C, n);
  inst.u0 = gauss(n, 1);
  const int k = std::uniform_int_distribution<int>(1, n)(rng);
  inst.X = orthonormal_basis(gauss(n, k));
  inst.eps.resize(m);
  for (int i = 0; i < m; ++i) {
    inst.eps[i] = std::pow(10.0, -4.0 * ud(rng));
  }
  return inst;
}

/// u in u0 + span(U0) with a(u, v) = l(v) for all v in span(U0).
inline Eigen::VectorXd solve_constrained(const AbstractInstance& inst) {
  if (inst.U0.cols() == 0) {
    return inst.u0;
  }
  const Eigen::MatrixXd k = inst.U0.transpose() * inst.A * inst.U0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw LabError("a is not coercive on the constraint space");
  }
  const Eigen::VectorXd y = ldlt.solve(inst.U0.transpose() * (inst.L - inst.A * inst.u0));
  return inst.u0 + inst.U0 * y;
}

inline double min_eig_on(const Eigen::MatrixXd& m, const Eigen::MatrixXd& basis) {
  const Eigen::MatrixXd r = basis.transpose() * m * basis;
  if (r.rows() == 0) {
    return std::numeric_limits<double>::infinity();
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

inline double max_eig_on(const Eigen::MatrixXd& m, const Eigen::MatrixXd& basis) {
  const Eigen::MatrixXd r = basis.transpose() * m * basis;
  if (r.rows() == 0) {
    return 0.0;
  }
  const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues();
  return ev[ev.size() - 1];
}

namespace detail {

inline Eigen::VectorXd galerkin_solve(const Eigen::MatrixXd& op, const Eigen::VectorXd& rhs,
                                      const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd k = x.transpose() * op * x;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw LabError("penalized form is not coercive on X");
  }
  return x * llt.solve(x.transpose() * rhs);
}

}  // namespace detail

/// u_eps in span(X) with a_eps(u_eps, v) = l_eps(v), l_eps = l + sum b_i(u, .)/eps_i.
inline Eigen::VectorXd solve_penalized(const AbstractInstance& inst, const Eigen::VectorXd& u) {
  Eigen::VectorXd rhs = inst.L;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    rhs += inst.B[i] * u / inst.eps[static_cast<long>(i)];
  }
  return detail::galerkin_solve(inst.a_eps(), rhs, inst.X);
}

inline Eigen::VectorXd solve_penalized(const AbstractInstance& inst) {
  return solve_penalized(inst, solve_constrained(inst));
}

struct CaptureConstants {
  bool feasible = false;
  std::vector<double> c;
};

/// Constants with |a(u,v) - l(v)| <= sum_i c_i ||v||_{b_i} on X. The residual
/// is bounded in the aggregate norm of sum_i B_i (restricted to X) by
/// c^2 = r^T (X^T B X)^+ r, and every c_i is set to c. Infeasible when the
/// residual does not vanish on the kernel of the aggregate form.
inline CaptureConstants capture_constants(const AbstractInstance& inst, const Eigen::VectorXd& u) {
  CaptureConstants out;
  const Eigen::VectorXd r = inst.X.transpose() * (inst.A * u - inst.L);
  Eigen::MatrixXd bsum = Eigen::MatrixXd::Zero(inst.n(), inst.n());
  for (const auto& b : inst.B) {
    bsum += b;
  }
  const Eigen::MatrixXd bx = inst.X.transpose() * bsum * inst.X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(bx);
  const auto& lam = eig.eigenvalues();
  const double lmax = lam.size() > 0 ? std::max(lam.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * r;
  double c2 = 0.0;
  double kernel = 0.0;
  for (long k = 0; k < lam.size(); ++k) {
    if (lam[k] > 1e-10 * lmax) {
      c2 += proj[k] * proj[k] / lam[k];
    } else {
      kernel += proj[k] * proj[k];
    }
  }
  const double scale = std::max(1.0, (inst.A * u - inst.L).norm());
  out.feasible = std::sqrt(kernel) <= 1e-8 * scale;
  if (out.feasible) {
    out.c.assign(inst.m(), std::sqrt(c2));
  }
  return out;
}

struct TheoremCheck {
  bool feasible = false;
  bool holds = false;
  double lhs = 0.0;
  double best_approx = 0.0;
  double rhs = 0.0;
  std::vector<double> c;
};

/// ||u - u_eps||^2_{a_eps} <= 3 (inf_{v in X} ||u - v||^2_{a_eps} + sum eps_i c_i^2).
inline TheoremCheck check_theorem_bound(const AbstractInstance& inst) {
  TheoremCheck out;
  const Eigen::VectorXd u = solve_constrained(inst);
  const CaptureConstants cap = capture_constants(inst, u);
  out.feasible = cap.feasible;
  if (!cap.feasible) {
    return out;
  }
  out.c = cap.c;
  const Eigen::MatrixXd ae = inst.a_eps();
  const Eigen::VectorXd ue = solve_penalized(inst, u);
  const Eigen::VectorXd e = u - ue;
  out.lhs = e.dot(ae * e);
  const Eigen::VectorXd best = detail::galerkin_solve(ae, ae * u, inst.X);
  const Eigen::VectorXd d = u - best;
  out.best_approx = std::max(0.0, d.dot(ae * d));
  double pen = 0.0;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    pen += inst.eps[static_cast<long>(i)] * cap.c[i] * cap.c[i];
  }
  out.rhs = 3.0 * (out.best_approx + pen);
  const double tol = 1e-9 * (out.lhs + out.rhs) + 1e-13 * u.dot(ae * u);
  out.holds = out.lhs <= out.rhs + tol;
  return out;
}

/// Max over w in X of |a_eps(u - u_eps, w) - (a(u, w) - l(w))| / ||w||.
inline double galerkin_identity_defect(const AbstractInstance& inst) {
  const Eigen::VectorXd u = solve_constrained(inst);
  const Eigen::VectorXd ue = solve_penalized(inst, u);
  const Eigen::VectorXd g = inst.a_eps() * (u - ue) - (inst.A * u - inst.L);
  return (inst.X.transpose() * g).norm();
}

/// Perturbed forms: A~ = A + tau E, C~_i = C_i + tau F_i, L~ = L + tau g.
struct Perturbation {
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd L;
};

inline Perturbation perturb(const AbstractInstance& inst, double tau, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  auto gauss = [&](long r, long c) {
    Eigen::MatrixXd g(r, c);
    for (long j = 0; j < c; ++j) {
      for (long i = 0; i < r; ++i) {
        g(i, j) = nd(rng);
      }
    }
    return g;
  };
  const long n = inst.n();
  Perturbation p;
  const Eigen::MatrixXd e = gauss(n, n);
  p.A = inst.A + tau * 0.5 * (e + e.transpose());
  for (const auto& c : inst.C) {
    const Eigen::MatrixXd ct = c + tau * gauss(c.rows(), n);
    p.B.push_back(ct.transpose() * ct);
  }
  p.L = inst.L + tau * gauss(n, 1);
  return p;
}

struct StrangCheck {
  bool feasible = false;
  bool holds = false;          ///< chain including the residual term
  bool holds_as_stated = false;  ///< chain without the residual term
  double lhs = 0.0;
  double rhs = 0.0;
  double rhs_as_stated = 0.0;
  double factor = 0.0;   ///< K = ||a||/alpha~ + 1 + sum c_i/(eps_i alpha~)
  double bracket = 0.0;  ///< ||u - v||_{a_eps} + sup_w R(v, w)/||w|| at the minimizing v
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  double norm_a = 0.0;
  std::vector<double> c;  ///< perturbation constants |b_i - b~_i| <= c_i ||.||^2 on X
};

/// Explicit Strang chain for the perturbed penalized solution u~:
///   ||u - u~||_{a_eps} <= ||u - v|| + K (||u - v|| + sum sqrt(eps_i) c^cap_i + R(v)/sqrt(alpha))
/// for every v in X, where R(v) = sup_w [|(a - a~)(v,w)|
/// + sum |(b_i - b~_i)(u - v, w)|/eps_i + |(l - l~)(w)|] / ||w||. The middle
/// sum bounds a(u, w) - l(w) through the capture constants; without it
/// (holds_as_stated) the chain needs a(u, .) = l on X.
inline StrangCheck check_strang_bound(const AbstractInstance& inst, const Perturbation& pert) {
  StrangCheck out;
  const Eigen::MatrixXd& X = inst.X;
  const Eigen::VectorXd u = solve_constrained(inst);
  const CaptureConstants cap = capture_constants(inst, u);
  out.feasible = cap.feasible;
  if (!cap.feasible) {
    return out;
  }
  Eigen::MatrixXd a1 = inst.A;
  Eigen::MatrixXd a1t = pert.A;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    a1 += inst.B[i];
    a1t += pert.B[i];
  }
  out.alpha = min_eig_on(a1, X);
  out.alpha_tilde = min_eig_on(a1t, X);
  if (!(out.alpha > 0.0) || !(out.alpha_tilde > 0.0)) {
    throw LabError("a_1 or its perturbation is not coercive on X");
  }
  if (min_eig_on(pert.A, X) < -1e-12 * std::max(1.0, max_eig_on(pert.A, X))) {
    throw LabError("perturbed energy form is not positive semidefinite on X");
  }
  out.norm_a = max_eig_on(inst.A, X);
  out.factor = out.norm_a / out.alpha_tilde + 1.0;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    const Eigen::MatrixXd d = X.transpose() * (inst.B[i] - pert.B[i]) * X;
    const double ci = d.rows() == 0 ? 0.0
                                    : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d, Eigen::EigenvaluesOnly)
                                          .eigenvalues()
                                          .cwiseAbs()
                                          .maxCoeff();
    out.c.push_back(ci);
    out.factor += ci / (inst.eps[static_cast<long>(i)] * out.alpha_tilde);
  }

  const Eigen::MatrixXd ae = inst.a_eps();
  Eigen::VectorXd lt = pert.L;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    lt += pert.B[i] * u / inst.eps[static_cast<long>(i)];
  }
  const Eigen::VectorXd ut = detail::galerkin_solve(inst.penalized(pert.A, pert.B), lt, X);
  const Eigen::VectorXd err = u - ut;
  out.lhs = std::sqrt(std::max(0.0, err.dot(ae * err)));

  double cap_term = 0.0;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    cap_term += std::sqrt(inst.eps[static_cast<long>(i)]) * cap.c[i];
  }

  // sup_w sum_j |g_j . w| / ||w|| over w in X is the largest norm of a signed
  // sum of the projected Riesz vectors.
  auto sup_term = [&](const Eigen::VectorXd& v) {
    std::vector<Eigen::VectorXd> g;
    g.push_back(X.transpose() * ((inst.A - pert.A) * v));
    for (std::size_t i = 0; i < inst.m(); ++i) {
      g.push_back(X.transpose() * ((inst.B[i] - pert.B[i]) * (u - v)) / inst.eps[static_cast<long>(i)]);
    }
    g.push_back(X.transpose() * (inst.L - pert.L));
    const std::size_t patterns = std::size_t{1} << (g.size() - 1);
    double best = 0.0;
    for (std::size_t s = 0; s < patterns; ++s) {
      Eigen::VectorXd sum = g[0];
      for (std::size_t j = 1; j < g.size(); ++j) {
        sum += ((s >> (j - 1)) & 1U) != 0 ? -g[j] : g[j];
      }
      best = std::max(best, sum.norm());
    }
    return best;
  };

  const Eigen::VectorXd best = detail::galerkin_solve(ae, ae * u, X);
  const Eigen::VectorXd ue = solve_penalized(inst, u);
  out.rhs = std::numeric_limits<double>::infinity();
  out.rhs_as_stated = std::numeric_limits<double>::infinity();
  const double sa = std::sqrt(out.alpha);
  for (const Eigen::VectorXd& v : {best, ut, ue}) {
    const Eigen::VectorXd d = u - v;
    const double dist = std::sqrt(std::max(0.0, d.dot(ae * d)));
    const double sup = sup_term(v);
    const double stated = dist + out.factor * (dist + sup / sa);
    const double corrected = stated + out.factor * cap_term;
    if (corrected < out.rhs) {
      out.rhs = corrected;
      out.bracket = dist + sup;
    }
    out.rhs_as_stated = std::min(out.rhs_as_stated, stated);
  }
  const double tol = 1e-9 * (out.lhs + out.rhs) + 1e-12;
  out.holds = out.lhs <= out.rhs + tol;
  out.holds_as_stated = out.lhs <= out.rhs_as_stated + tol;
  return out;
}

struct SweepSummary {
  int instances = 0;
  int feasible = 0;
  int skipped = 0;
  int holds = 0;
  int violations = 0;
  int holds_as_stated = 0;  ///< Strang sweeps only
};

inline SweepSummary theorem_sweep(std::uint64_t seed, int count, const GeneratorOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  SweepSummary s;
  for (int k = 0; k < count; ++k) {
    const AbstractInstance inst = random_instance(rng, opt);
    ++s.instances;
    const TheoremCheck chk = check_theorem_bound(inst);
    if (!chk.feasible) {
      ++s.skipped;
      continue;
    }
    ++s.feasible;
    chk.holds ? ++s.holds : ++s.violations;
  }
  return s;
}

inline SweepSummary strang_sweep(std::uint64_t seed, int count, double tau,
                                 const GeneratorOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  SweepSummary s;
  for (int k = 0; k < count; ++k) {
    const AbstractInstance inst = random_instance(rng, opt);
    const Perturbation pert = perturb(inst, tau, rng);
    ++s.instances;
    StrangCheck chk;
    try {
      chk = check_strang_bound(inst, pert);
    } catch (const LabError&) {
      ++s.skipped;
      continue;
    }
    if (!chk.feasible) {
      ++s.skipped;
      continue;
    }
    ++s.feasible;
    chk.holds ? ++s.holds : ++s.violations;
    if (chk.holds_as_stated) {
      ++s.holds_as_stated;
    }
  }
  return s;
}

}  // namespace membrane::lab
