#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "membrane/bfs_basis.hpp"
#include "membrane/geometry.hpp"
#include "membrane/quadrature.hpp"

namespace membrane {

/// Exact field evaluated with the region label of the point, so that
/// one-sided limits are used on cut cells.
using RegionField = std::function<FieldSample(Point2, Region)>;

struct ErrorNorms {
  double l2 = 0.0;  ///< ||u_h - u||_L2
  double h1 = 0.0;  ///< ||grad(u_h - u)||_L2
  double h2 = 0.0;  ///< ||Lap(u_h - u)||_L2
};

namespace detail {

struct ErrorSums {
  double l2 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;

  void add(double w, const FieldSample& a, const FieldSample& b) {
    const double dv = a.value - b.value;
    const double dx = a.dx - b.dx;
    const double dy = a.dy - b.dy;
    const double dl = a.laplacian() - b.laplacian();
    l2 += w * dv * dv;
    h1 += w * (dx * dx + dy * dy);
    h2 += w * dl * dl;
  }

  [[nodiscard]] ErrorNorms finish() const { return {std::sqrt(l2), std::sqrt(h1), std::sqrt(h2)}; }
};

}  // namespace detail

/// Errors with the integration split into the membrane and every particle,
/// using cut-cell rules on cells crossed by a particle boundary.
inline ErrorNorms compute_errors(const BfsSpace& space, const Eigen::VectorXd& coeffs,
                                 const RegionField& exact, const std::vector<Particle>& particles,
                                 const QuadratureOptions& opt = {}) {
  detail::ErrorSums sums;
  const double hx = space.grid.hx();
  const double hy = space.grid.hy();
  for (std::size_t c = 0; c < space.grid.num_cells(); ++c) {
    const Rect cell = space.grid.cell_rect(c);
    const auto local = gather(space, c, coeffs);
    for (int r = -1; r < static_cast<int>(particles.size()); ++r) {
      const Region region{r};
      const QuadRule rule = region_rule(particles, cell, region, opt);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point2 x = rule.points[q];
        const FieldSample uh = combine(local, eval_all_shapes(space.grid.to_reference(c, x), hx, hy));
        sums.add(rule.weights[q], uh, exact(x, region));
      }
    }
  }
  return sums.finish();
}

/// Errors with plain tensor Gauss on every cell, ignoring the interfaces:
/// each cell is attributed to the region of its center and the exact field
/// is evaluated with that region's formula throughout the cell.
inline ErrorNorms compute_errors_naive(const BfsSpace& space, const Eigen::VectorXd& coeffs,
                                       const RegionField& exact, const std::vector<Particle>& particles,
                                       int quad_order = 5) {
  detail::ErrorSums sums;
  const double hx = space.grid.hx();
  const double hy = space.grid.hy();
  for (std::size_t c = 0; c < space.grid.num_cells(); ++c) {
    const Rect cell = space.grid.cell_rect(c);
    const QuadRule rule = tensor_gauss(cell, quad_order);
    const Region region = classify_point(particles, cell.center());
    const auto local = gather(space, c, coeffs);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point2 x = rule.points[q];
      const FieldSample uh = combine(local, eval_all_shapes(space.grid.to_reference(c, x), hx, hy));
      sums.add(rule.weights[q], uh, exact(x, region));
    }
  }
  return sums.finish();
}

class ReferenceError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Difference of a coarse and a fine BFS field on nested grids. On every
/// fine cell both fields are bicubic, so a 4-point tensor rule integrates all
/// three squared differences exactly.
inline ErrorNorms compare_to_reference(const BfsSpace& coarse, const Eigen::VectorXd& coarse_coeffs,
                                       const BfsSpace& fine, const Eigen::VectorXd& fine_coeffs) {
  const RectGrid& cg = coarse.grid;
  const RectGrid& fg = fine.grid;
  const Rect& a = cg.bounds();
  const Rect& b = fg.bounds();
  if (a.xmin != b.xmin || a.xmax != b.xmax || a.ymin != b.ymin || a.ymax != b.ymax) {
    throw ReferenceError("reference grid covers a different domain");
  }
  if (fg.nx() % cg.nx() != 0 || fg.ny() % cg.ny() != 0) {
    throw ReferenceError("reference grid is not nested in the coarse grid");
  }
  const int rx = fg.nx() / cg.nx();
  const int ry = fg.ny() / cg.ny();
  detail::ErrorSums sums;
  for (std::size_t c = 0; c < fg.num_cells(); ++c) {
    const auto ij = fg.cell_ij(c);
    const std::size_t cc = cg.cell_index(ij[0] / rx, ij[1] / ry);
    const auto lf = gather(fine, c, fine_coeffs);
    const auto lc = gather(coarse, cc, coarse_coeffs);
    const QuadRule rule = tensor_gauss(fg.cell_rect(c), 4);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point2 x = rule.points[q];
      const FieldSample uf = combine(lf, eval_all_shapes(fg.to_reference(c, x), fg.hx(), fg.hy()));
      const FieldSample uc = combine(lc, eval_all_shapes(cg.to_reference(cc, x), cg.hx(), cg.hy()));
      sums.add(rule.weights[q], uc, uf);
    }
  }
  return sums.finish();
}

/// L2(boundary) residuals of the coupling conditions on one particle:
/// height u_h - f1 (mean removed for variable height) and slope du_h/dn - f2.
struct BoundaryResidual {
  double height = 0.0;
  double slope = 0.0;
};

inline BoundaryResidual boundary_residual(const BfsSpace& space, const Eigen::VectorXd& coeffs,
                                          const Particle& p, int curve_points = 13) {
  std::vector<double> w;
  std::vector<double> dh;
  std::vector<double> ds;
  for (const CurveSegment& seg : curve_segments(p, space.grid)) {
    const CurveQuadrature q = curve_quadrature_on_arc(p, seg.theta0, seg.theta1, curve_points);
    for (std::size_t j = 0; j < q.points.size(); ++j) {
      const CurvePoint& cp = q.points[j];
      const FieldSample u = evaluate_in_cell(space, coeffs, seg.cell, cp.position);
      w.push_back(q.weights[j]);
      dh.push_back(u.value - p.f1(q.theta[j]));
      ds.push_back(cp.normal.x * u.dx + cp.normal.y * u.dy - p.f2(q.theta[j]));
    }
  }
  double mean = 0.0;
  double length = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    mean += w[j] * dh[j];
    length += w[j];
  }
  mean = p.variable_height && length > 0.0 ? mean / length : 0.0;
  BoundaryResidual r;
  for (std::size_t j = 0; j < w.size(); ++j) {
    r.height += w[j] * (dh[j] - mean) * (dh[j] - mean);
    r.slope += w[j] * ds[j] * ds[j];
  }
  r.height = std::sqrt(r.height);
  r.slope = std::sqrt(r.slope);
  return r;
}

/// Pairwise orders log(e_k/e_{k+1}) / log(h_k/h_{k+1}) and the least-squares
/// slope of log e against log h. Rows with zero error are left out of the fit
/// and give NaN pairwise entries.
struct EocResult {
  std::vector<double> pairwise;
  double fit = std::numeric_limits<double>::quiet_NaN();
  int excluded = 0;
};

inline EocResult compute_eoc(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() != e.size() || h.size() < 2) {
    throw std::invalid_argument("EOC needs at least two (h, error) pairs");
  }
  EocResult out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] == h[k + 1]) {
      throw std::invalid_argument("EOC needs distinct mesh sizes");
    }
    if (e[k] > 0.0 && e[k + 1] > 0.0) {
      out.pairwise.push_back(std::log(e[k] / e[k + 1]) / std::log(h[k] / h[k + 1]));
    } else {
      out.pairwise.push_back(nan);
    }
  }
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  int m = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(e[k] > 0.0)) {
      ++out.excluded;
      continue;
    }
    const double x = std::log(h[k]);
    const double y = std::log(e[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) {
    const double den = m * sxx - sx * sx;
    if (den != 0.0) {
      out.fit = (m * sxy - sx * sy) / den;
    }
  }
  return out;
}

struct ErrorRow {
  int n = 0;
  double h = 0.0;
  ErrorNorms err;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  EocResult l2;
  EocResult h1;
  EocResult h2;
};

inline ErrorReport make_report(std::vector<ErrorRow> rows) {
  ErrorReport rep;
  rep.rows = std::move(rows);
  if (rep.rows.size() < 2) {
    return rep;
  }
  std::vector<double> h;
  std::vector<double> l2;
  std::vector<double> h1;
  std::vector<double> h2;
  for (const ErrorRow& r : rep.rows) {
    h.push_back(r.h);
    l2.push_back(r.err.l2);
    h1.push_back(r.err.h1);
    h2.push_back(r.err.h2);
  }
  rep.l2 = compute_eoc(h, l2);
  rep.h1 = compute_eoc(h, h1);
  rep.h2 = compute_eoc(h, h2);
  return rep;
}

}  // namespace membrane
