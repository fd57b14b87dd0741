#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace membrane {

/// One-dimensional rule: nodes and positive weights.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline Rule1D compute_gauss_legendre(int n) {
  // Newton on P_n in [-1,1], mapped to [0,1].
  Rule1D rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = 0.5 * (1.0 - x);
    rule.nodes[hi] = 0.5 * (1.0 + x);
    rule.weights[lo] = 0.5 * w;
    rule.weights[hi] = 0.5 * w;
  }
  return rule;
}

inline constexpr int kMaxGaussPoints = 128;

}  // namespace detail

/// Gauss-Legendre rule with n points on [0,1], exact for degree 2n - 1.
inline const Rule1D& gauss_legendre(int n) {
  if (n < 1 || n > detail::kMaxGaussPoints) {
    throw std::invalid_argument("Gauss-Legendre order out of range");
  }
  static const std::vector<Rule1D> table = [] {
    std::vector<Rule1D> t(detail::kMaxGaussPoints + 1);
    for (int k = 1; k <= detail::kMaxGaussPoints; ++k) {
      t[static_cast<std::size_t>(k)] = detail::compute_gauss_legendre(k);
    }
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}

namespace detail {

// n-point Gauss rule on [-1,1] for the weight 1/sqrt(1 - k^2 x^2), k < 1,
// from a discretized Stieltjes procedure and Golub-Welsch.
inline Rule1D gauss_arcsine_weight(int n, double k) {
  const int m = 2 * n + 48;
  const Rule1D& base = gauss_legendre(m);
  const auto ms = static_cast<std::size_t>(m);
  std::vector<double> x(ms);
  std::vector<double> w(ms);
  for (std::size_t i = 0; i < ms; ++i) {
    x[i] = 2.0 * base.nodes[i] - 1.0;
    w[i] = 2.0 * base.weights[i] / std::sqrt(1.0 - k * k * x[i] * x[i]);
  }
  double mu0 = 0.0;
  for (double wi : w) {
    mu0 += wi;
  }
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  std::vector<double> q_prev(ms, 0.0);
  std::vector<double> q(ms, 1.0 / std::sqrt(mu0));
  double b_prev = 0.0;
  for (int j = 0; j < n; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < ms; ++i) {
      a += w[i] * x[i] * q[i] * q[i];
    }
    alpha[j] = a;
    std::vector<double> r(ms);
    double nr = 0.0;
    for (std::size_t i = 0; i < ms; ++i) {
      r[i] = (x[i] - a) * q[i] - b_prev * q_prev[i];
      nr += w[i] * r[i] * r[i];
    }
    const double b = std::sqrt(nr);
    if (j + 1 < n) {
      beta[j] = b;
    }
    q_prev = q;
    for (std::size_t i = 0; i < ms; ++i) {
      q[i] = r[i] / b;
    }
    b_prev = b;
  }
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    jacobi(j, j) = alpha[j];
    if (j + 1 < n) {
      jacobi(j, j + 1) = beta[j];
      jacobi(j + 1, j) = beta[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Rule1D rule;
  for (int j = 0; j < n; ++j) {
    const double v0 = eig.eigenvectors()(0, j);
    rule.nodes.push_back(eig.eigenvalues()[j]);
    rule.weights.push_back(mu0 * v0 * v0);
  }
  return rule;
}

}  // namespace detail

/// Trigonometric Gauss rule on the arc [alpha, beta]: n nodes, exact for
/// trigonometric polynomials of degree n - 1 on arcs up to length pi. Longer
/// arcs are split into equal pieces; the full period uses equispaced nodes.
inline Rule1D trig_gauss(double alpha, double beta, int n) {
  if (n < 1) {
    throw std::invalid_argument("trigonometric Gauss rule needs at least one node");
  }
  const double length = beta - alpha;
  Rule1D rule;
  if (!(length > 0.0)) {
    return rule;
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (std::abs(length - two_pi) <= 1e-14 * two_pi) {
    for (int j = 0; j < n; ++j) {
      rule.nodes.push_back(alpha + two_pi * j / n);
      rule.weights.push_back(two_pi / n);
    }
    return rule;
  }
  const int pieces = static_cast<int>(std::ceil(length / std::numbers::pi - 1e-12));
  const double piece = length / pieces;
  const double omega = 0.5 * piece;
  const double k = std::sin(0.5 * omega);
  const Rule1D base = detail::gauss_arcsine_weight(n, k);
  for (int p = 0; p < pieces; ++p) {
    const double mid = alpha + (p + 0.5) * piece;
    for (std::size_t j = 0; j < base.size(); ++j) {
      rule.nodes.push_back(mid + 2.0 * std::asin(k * base.nodes[j]));
      rule.weights.push_back(2.0 * k * base.weights[j]);
    }
  }
  return rule;
}

}  // namespace membrane
