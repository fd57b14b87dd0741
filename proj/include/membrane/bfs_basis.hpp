#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "membrane/grid.hpp"

namespace membrane {

/// Value and derivatives up to second order of a scalar field at a point.
struct FieldSample {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;

  [[nodiscard]] double laplacian() const { return dxx + dyy; }
};

using ShapeEval = FieldSample;

namespace detail {

// Cubic Hermite functions on [0,1]: value at 0, slope at 0, value at 1,
// slope at 1. Row = derivative order.
inline std::array<std::array<double, 4>, 3> hermite_1d(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {{
      {1.0 - 3.0 * t2 + 2.0 * t3, t - 2.0 * t2 + t3, 3.0 * t2 - 2.0 * t3, -t2 + t3},
      {-6.0 * t + 6.0 * t2, 1.0 - 4.0 * t + 3.0 * t2, 6.0 * t - 6.0 * t2, -2.0 * t + 3.0 * t2},
      {-6.0 + 12.0 * t, -4.0 + 6.0 * t, 6.0 - 12.0 * t, -2.0 + 6.0 * t},
  }};
}

}  // namespace detail

/// All 16 BFS shape functions of a cell with edge lengths (hx, hy) at the
/// reference point. Local index l = 4 * corner + alpha, see DofMap. The
/// returned derivatives are physical.
inline std::array<ShapeEval, 16> eval_all_shapes(Point2 ref, double hx = 1.0, double hy = 1.0) {
  const auto hxs = detail::hermite_1d(ref.x);
  const auto hys = detail::hermite_1d(ref.y);
  std::array<ShapeEval, 16> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t a = k & 1U;
    const std::size_t b = k >> 1U;
    for (std::size_t alpha = 0; alpha < 4; ++alpha) {
      const std::size_t p = alpha & 1U;
      const std::size_t q = alpha >> 1U;
      const std::size_t ix = 2 * a + p;
      const std::size_t iy = 2 * b + q;
      const double sx = p == 1 ? hx : 1.0;
      const double sy = q == 1 ? hy : 1.0;
      const double s = sx * sy;
      ShapeEval& e = out[4 * k + alpha];
      e.value = s * hxs[0][ix] * hys[0][iy];
      e.dx = s * hxs[1][ix] * hys[0][iy] / hx;
      e.dy = s * hxs[0][ix] * hys[1][iy] / hy;
      e.dxx = s * hxs[2][ix] * hys[0][iy] / (hx * hx);
      e.dxy = s * hxs[1][ix] * hys[1][iy] / (hx * hy);
      e.dyy = s * hxs[0][ix] * hys[2][iy] / (hy * hy);
    }
  }
  return out;
}

inline ShapeEval eval_shape(std::size_t local_index, Point2 ref, double hx = 1.0, double hy = 1.0) {
  if (local_index >= 16) {
    throw std::out_of_range("BFS local index must be in 0..15");
  }
  return eval_all_shapes(ref, hx, hy)[local_index];
}

/// Nodal data of a field: value, d/dx, d/dy and d2/dxdy at a point.
using NodalField = std::function<FieldSample(Point2)>;

/// BFS interpolant over all nodes (boundary DOFs included).
inline Eigen::VectorXd interpolate(const NodalField& field, const BfsSpace& space) {
  Eigen::VectorXd coeffs(static_cast<long>(space.dofs.num_total()));
  for (std::size_t node = 0; node < space.grid.num_nodes(); ++node) {
    const FieldSample s = field(space.grid.node_position(node));
    const auto g = static_cast<long>(4 * node);
    coeffs[g] = s.value;
    coeffs[g + 1] = s.dx;
    coeffs[g + 2] = s.dy;
    coeffs[g + 3] = s.dxy;
  }
  return coeffs;
}

/// Gathers the 16 cell coefficients of a full DOF vector.
inline std::array<double, 16> gather(const BfsSpace& space, std::size_t cell,
                                     const Eigen::VectorXd& coeffs) {
  std::array<double, 16> local{};
  const auto dofs = space.dofs.cell_dofs(space.grid, cell);
  for (std::size_t l = 0; l < 16; ++l) {
    local[l] = coeffs[static_cast<long>(dofs[l])];
  }
  return local;
}

inline FieldSample combine(const std::array<double, 16>& local, const std::array<ShapeEval, 16>& shapes) {
  FieldSample s;
  for (std::size_t l = 0; l < 16; ++l) {
    const double c = local[l];
    s.value += c * shapes[l].value;
    s.dx += c * shapes[l].dx;
    s.dy += c * shapes[l].dy;
    s.dxx += c * shapes[l].dxx;
    s.dxy += c * shapes[l].dxy;
    s.dyy += c * shapes[l].dyy;
  }
  return s;
}

/// Evaluates a BFS field inside a known cell.
inline FieldSample evaluate_in_cell(const BfsSpace& space, const Eigen::VectorXd& coeffs,
                                    std::size_t cell, Point2 p) {
  const auto shapes =
      eval_all_shapes(space.grid.to_reference(cell, p), space.grid.hx(), space.grid.hy());
  return combine(gather(space, cell, coeffs), shapes);
}

/// Evaluates a BFS field (full DOF vector) at a physical point.
inline FieldSample evaluate(const BfsSpace& space, const Eigen::VectorXd& coeffs, Point2 p) {
  return evaluate_in_cell(space, coeffs, space.grid.locate(p), p);
}

}  // namespace membrane
