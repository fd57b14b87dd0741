#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "membrane/bfs_basis.hpp"
#include "membrane/geometry.hpp"
#include "membrane/grid.hpp"
#include "membrane/quadrature.hpp"

namespace membrane {

using SparseMatrix = Eigen::SparseMatrix<double>;

class AssemblyError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ModelParams {
  double kappa = 1.0;
  double sigma = 0.0;
};

/// Curve penalties with eps1 = c h^lambda1 (height) and eps2 = c h^lambda2 (slope).
struct SoftCurve {
  double lambda1 = 2.0;
  double lambda2 = 1.0;
  double c = 1e-3;
};

/// Bulk penalty in the H^s(B) inner product, s in {0, 1}, eps = c h^lambda.
struct SoftBulk {
  int s = 1;
  double lambda = 2.0;
  double c = 1e-3;
};

struct PenaltyConfig {
  std::variant<SoftCurve, SoftBulk> formulation = SoftCurve{};

  [[nodiscard]] bool is_curve() const { return std::holds_alternative<SoftCurve>(formulation); }

  /// Penalty parameters for the reported mesh size h: {eps1, eps2} or {eps}.
  [[nodiscard]] std::vector<double> epsilons(double h) const {
    if (const auto* sc = std::get_if<SoftCurve>(&formulation)) {
      return {sc->c * std::pow(h, sc->lambda1), sc->c * std::pow(h, sc->lambda2)};
    }
    const auto& sb = std::get<SoftBulk>(formulation);
    return {sb.c * std::pow(h, sb.lambda)};
  }
};

/// sign * coeff * v v^T on free DOFs.
struct LowRankTerm {
  double sign = 1.0;
  double coeff = 0.0;
  Eigen::VectorXd v;
};

/// base + sum of signed rank-one terms, with right-hand side, on free DOFs.
struct AssembledSystem {
  SparseMatrix base;
  std::vector<LowRankTerm> lowrank;
  Eigen::VectorXd rhs;

  [[nodiscard]] long n_free() const { return base.rows(); }

  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = base * x;
    for (const LowRankTerm& t : lowrank) {
      y += (t.sign * t.coeff * t.v.dot(x)) * t.v;
    }
    return y;
  }

  [[nodiscard]] Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd(base);
    for (const LowRankTerm& t : lowrank) {
      m += (t.sign * t.coeff) * t.v * t.v.transpose();
    }
    return m;
  }
};

/// A symmetric form split into a sparse part, rank-one corrections and a load.
struct FormPart {
  SparseMatrix sparse;
  std::vector<LowRankTerm> lowrank;
  Eigen::VectorXd rhs;

  [[nodiscard]] double quadratic(const Eigen::VectorXd& x) const {
    double q = x.dot(sparse * x);
    for (const LowRankTerm& t : lowrank) {
      const double d = t.v.dot(x);
      q += t.sign * t.coeff * d * d;
    }
    return q;
  }
};

namespace detail {

using LocalMatrix = Eigen::Matrix<double, 16, 16>;
using LocalVector = Eigen::Matrix<double, 16, 1>;

inline void scatter(const std::array<std::ptrdiff_t, 16>& dofs, const LocalMatrix& k,
                    std::vector<Eigen::Triplet<double>>& out) {
  for (std::size_t i = 0; i < 16; ++i) {
    if (dofs[i] < 0) {
      continue;
    }
    for (std::size_t j = 0; j < 16; ++j) {
      if (dofs[j] < 0) {
        continue;
      }
      const double v = k(static_cast<long>(i), static_cast<long>(j));
      if (v != 0.0) {
        out.emplace_back(static_cast<int>(dofs[i]), static_cast<int>(dofs[j]), v);
      }
    }
  }
}

inline void scatter(const std::array<std::ptrdiff_t, 16>& dofs, const LocalVector& f,
                    Eigen::VectorXd& out) {
  for (std::size_t i = 0; i < 16; ++i) {
    if (dofs[i] >= 0) {
      out[dofs[i]] += f[static_cast<long>(i)];
    }
  }
}

inline SparseMatrix to_sparse(long n, const std::vector<Eigen::Triplet<double>>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

inline std::array<ShapeEval, 16> shapes_at(const BfsSpace& space, std::size_t cell, Point2 x) {
  return eval_all_shapes(space.grid.to_reference(cell, x), space.grid.hx(), space.grid.hy());
}

inline std::vector<std::size_t> candidate_cells(const BfsSpace& space, const Particle& p) {
  const RectGrid& g = space.grid;
  std::vector<std::size_t> cells;
  if (p.exterior) {
    cells.resize(g.num_cells());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      cells[c] = c;
    }
    return cells;
  }
  const Rect box = p.bounding_box();
  const auto lo = g.cell_ij(g.locate({box.xmin, box.ymin}));
  const auto hi = g.cell_ij(g.locate({box.xmax, box.ymax}));
  for (int j = std::max(0, lo[1] - 1); j <= std::min(g.ny() - 1, hi[1] + 1); ++j) {
    for (int i = std::max(0, lo[0] - 1); i <= std::min(g.nx() - 1, hi[0] + 1); ++i) {
      cells.push_back(g.cell_index(i, j));
    }
  }
  return cells;
}

}  // namespace detail

/// Energy matrix kappa (Lap w, Lap v) + sigma (grad w, grad v) on free DOFs.
/// All cells are congruent, so the element matrix is computed once.
inline SparseMatrix assemble_energy(const BfsSpace& space, const ModelParams& params) {
  if (!(params.kappa > 0.0) || params.sigma < 0.0) {
    throw AssemblyError("energy needs kappa > 0 and sigma >= 0");
  }
  const auto n = static_cast<long>(space.dofs.num_free());
  detail::LocalMatrix k = detail::LocalMatrix::Zero();
  const QuadRule rule = tensor_gauss(space.grid.cell_rect(0), 4);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto s = detail::shapes_at(space, 0, rule.points[q]);
    const double w = rule.weights[q];
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) {
        k(static_cast<long>(i), static_cast<long>(j)) +=
            w * (params.kappa * s[i].laplacian() * s[j].laplacian() +
                 params.sigma * (s[i].dx * s[j].dx + s[i].dy * s[j].dy));
      }
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(space.grid.num_cells() * 256);
  for (std::size_t c = 0; c < space.grid.num_cells(); ++c) {
    detail::scatter(space.dofs.cell_free_dofs(space.grid, c), k, trip);
  }
  return detail::to_sparse(n, trip);
}

/// Curve penalty b^1 (which = 1: traces of values, data f1, mean removed on
/// variable-height particles) or b^2 (which = 2: normal derivatives, data f2).
/// The load is the unscaled functional b(u, .) built from the data.
inline FormPart assemble_curve_penalty(const BfsSpace& space, const std::vector<Particle>& particles,
                                       int which, const QuadratureOptions& opt = {}) {
  if (which != 1 && which != 2) {
    throw AssemblyError("curve penalty index must be 1 or 2");
  }
  const auto n = static_cast<long>(space.dofs.num_free());
  FormPart part;
  part.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (const Particle& p : particles) {
    const auto segments = curve_segments(p, space.grid);
    if (segments.empty()) {
      throw AssemblyError("particle boundary does not meet the grid");
    }
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(n);
    double data_moment = 0.0;
    double length = 0.0;
    for (const CurveSegment& seg : segments) {
      const CurveQuadrature q = curve_quadrature_on_arc(p, seg.theta0, seg.theta1, opt.curve_points);
      const auto dofs = space.dofs.cell_free_dofs(space.grid, seg.cell);
      detail::LocalMatrix k = detail::LocalMatrix::Zero();
      detail::LocalVector f = detail::LocalVector::Zero();
      detail::LocalVector m = detail::LocalVector::Zero();
      for (std::size_t j = 0; j < q.points.size(); ++j) {
        const CurvePoint& cp = q.points[j];
        const auto s = detail::shapes_at(space, seg.cell, cp.position);
        detail::LocalVector t;
        for (std::size_t l = 0; l < 16; ++l) {
          t[static_cast<long>(l)] =
              which == 1 ? s[l].value : cp.normal.x * s[l].dx + cp.normal.y * s[l].dy;
        }
        const double w = q.weights[j];
        const double data = which == 1 ? p.f1(q.theta[j]) : p.f2(q.theta[j]);
        k += w * t * t.transpose();
        f += (w * data) * t;
        m += w * t;
        data_moment += w * data;
        length += w;
      }
      detail::scatter(dofs, k, trip);
      detail::scatter(dofs, f, part.rhs);
      detail::scatter(dofs, m, moment);
    }
    if (which == 1 && p.variable_height) {
      part.lowrank.push_back({-1.0, 1.0 / length, moment});
      part.rhs -= (data_moment / length) * moment;
    }
  }
  part.sparse = detail::to_sparse(n, trip);
  return part;
}

/// Prescribed field on one particle for the bulk penalty.
using BulkField = std::function<FieldSample(Point2)>;

/// Bulk penalty b_B in L^2(B) (s = 0) or the gradient inner product (s = 1).
/// Variable height: s = 0 removes the mean, s = 1 needs nothing more.
/// Fixed height: s = 1 adds (int w)(int v). bulk[i] is the target on B_i.
inline FormPart assemble_bulk_penalty(const BfsSpace& space, const std::vector<Particle>& particles,
                                      int s, const std::vector<BulkField>& bulk,
                                      const QuadratureOptions& opt = {}) {
  if (s != 0 && s != 1) {
    throw AssemblyError("bulk penalty supports s = 0 and s = 1 only");
  }
  if (!bulk.empty() && bulk.size() != particles.size()) {
    throw AssemblyError("one bulk field per particle required");
  }
  const auto n = static_cast<long>(space.dofs.num_free());
  FormPart part;
  part.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Particle& p = particles[i];
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(n);
    double data_moment = 0.0;
    double area = 0.0;
    for (const std::size_t c : detail::candidate_cells(space, p)) {
      const QuadRule rule =
          region_rule(particles, space.grid.cell_rect(c), Region::of_particle(static_cast<int>(i)), opt);
      if (rule.empty()) {
        continue;
      }
      const auto dofs = space.dofs.cell_free_dofs(space.grid, c);
      detail::LocalMatrix k = detail::LocalMatrix::Zero();
      detail::LocalVector f = detail::LocalVector::Zero();
      detail::LocalVector m = detail::LocalVector::Zero();
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto sh = detail::shapes_at(space, c, rule.points[q]);
        const double w = rule.weights[q];
        const FieldSample g = bulk.empty() ? FieldSample{} : bulk[i](rule.points[q]);
        detail::LocalVector v;
        detail::LocalVector gx;
        detail::LocalVector gy;
        for (std::size_t l = 0; l < 16; ++l) {
          v[static_cast<long>(l)] = sh[l].value;
          gx[static_cast<long>(l)] = sh[l].dx;
          gy[static_cast<long>(l)] = sh[l].dy;
        }
        if (s == 0) {
          k += w * v * v.transpose();
          f += (w * g.value) * v;
        } else {
          k += w * (gx * gx.transpose() + gy * gy.transpose());
          f += w * (g.dx * gx + g.dy * gy);
        }
        m += w * v;
        data_moment += w * g.value;
        area += w;
      }
      detail::scatter(dofs, k, trip);
      detail::scatter(dofs, f, part.rhs);
      detail::scatter(dofs, m, moment);
    }
    if (!(area > 0.0)) {
      throw AssemblyError("particle " + std::to_string(i) + " has no area on the grid");
    }
    if (s == 0 && p.variable_height) {
      part.lowrank.push_back({-1.0, 1.0 / area, moment});
      part.rhs -= (data_moment / area) * moment;
    } else if (s == 1 && !p.variable_height) {
      part.lowrank.push_back({1.0, 1.0, moment});
      part.rhs += data_moment * moment;
    }
  }
  part.sparse = detail::to_sparse(n, trip);
  return part;
}

/// Everything needed to assemble a discrete penalized problem.
struct ProblemSetup {
  std::vector<Particle> particles;
  ModelParams model;
  PenaltyConfig penalty;
  std::vector<BulkField> bulk;  ///< per particle; required for the bulk formulation
  QuadratureOptions quad;
};

/// base = A + sum_k (1/eps_k) B_k, rank-one terms and load scaled alike.
inline AssembledSystem build_system(const BfsSpace& space, const ProblemSetup& setup) {
  const std::vector<double> eps = setup.penalty.epsilons(space.grid.reported_h());
  for (double e : eps) {
    if (!(e > 0.0)) {
      throw AssemblyError("penalty parameters must be positive");
    }
  }
  AssembledSystem sys;
  sys.base = assemble_energy(space, setup.model);
  sys.rhs = Eigen::VectorXd::Zero(sys.base.rows());
  auto add = [&sys](const FormPart& part, double inv_eps) {
    if (inv_eps == 0.0) {
      return;
    }
    sys.base += inv_eps * part.sparse;
    for (const LowRankTerm& t : part.lowrank) {
      sys.lowrank.push_back({t.sign, t.coeff * inv_eps, t.v});
    }
    sys.rhs += inv_eps * part.rhs;
  };
  if (setup.penalty.is_curve()) {
    add(assemble_curve_penalty(space, setup.particles, 1, setup.quad), 1.0 / eps[0]);
    add(assemble_curve_penalty(space, setup.particles, 2, setup.quad), 1.0 / eps[1]);
  } else {
    const auto& sb = std::get<SoftBulk>(setup.penalty.formulation);
    if (setup.bulk.size() != setup.particles.size()) {
      throw AssemblyError("bulk formulation needs a prescribed field for every particle");
    }
    add(assemble_bulk_penalty(space, setup.particles, sb.s, setup.bulk, setup.quad), 1.0 / eps[0]);
  }
  sys.base.makeCompressed();
  return sys;
}

}  // namespace membrane
