#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace membrane {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

struct Rect {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  [[nodiscard]] double width() const { return xmax - xmin; }
  [[nodiscard]] double height() const { return ymax - ymin; }
  [[nodiscard]] double area() const { return width() * height(); }
  [[nodiscard]] Point2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  [[nodiscard]] bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

class GridError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform axis-aligned grid of congruent rectangular cells.
///
/// Nodes are numbered row by row, node (i, j) -> j * (nx + 1) + i. Cells the
/// same way with nx per row. Local cell corners are ordered k = a + 2 b with
/// (a, b) in {0,1}^2, i.e. lower-left, lower-right, upper-left, upper-right.
class RectGrid {
public:
  RectGrid(Rect bounds, int nx, int ny) : bounds_(bounds), nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1) {
      throw GridError("grid needs at least one cell per axis");
    }
    if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin)) {
      throw GridError("grid bounds are empty or inverted");
    }
    hx_ = bounds.width() / nx;
    hy_ = bounds.height() / ny;
  }

  [[nodiscard]] const Rect& bounds() const { return bounds_; }
  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] double hx() const { return hx_; }
  [[nodiscard]] double hy() const { return hy_; }

  /// Mesh size used for penalty schedules and convergence plots: 1/N for N
  /// cells per axis. On [-1,1]^2 the cell edge is twice this value.
  [[nodiscard]] double reported_h() const { return 1.0 / nx_; }

  [[nodiscard]] std::size_t num_cells() const { return static_cast<std::size_t>(nx_) * ny_; }
  [[nodiscard]] std::size_t num_nodes() const {
    return static_cast<std::size_t>(nx_ + 1) * (ny_ + 1);
  }

  [[nodiscard]] std::size_t node_index(int i, int j) const {
    return static_cast<std::size_t>(j) * (nx_ + 1) + i;
  }
  [[nodiscard]] std::size_t cell_index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + i;
  }
  [[nodiscard]] std::array<int, 2> cell_ij(std::size_t cell) const {
    return {static_cast<int>(cell % nx_), static_cast<int>(cell / nx_)};
  }
  [[nodiscard]] std::array<int, 2> node_ij(std::size_t node) const {
    const auto stride = static_cast<std::size_t>(nx_ + 1);
    return {static_cast<int>(node % stride), static_cast<int>(node / stride)};
  }

  [[nodiscard]] Point2 node_position(std::size_t node) const {
    const auto [i, j] = node_ij(node);
    return {bounds_.xmin + i * hx_, bounds_.ymin + j * hy_};
  }

  [[nodiscard]] bool on_boundary(std::size_t node) const {
    const auto [i, j] = node_ij(node);
    return i == 0 || j == 0 || i == nx_ || j == ny_;
  }

  [[nodiscard]] std::array<std::size_t, 4> cell_nodes(std::size_t cell) const {
    const auto [i, j] = cell_ij(cell);
    return {node_index(i, j), node_index(i + 1, j), node_index(i, j + 1), node_index(i + 1, j + 1)};
  }

  [[nodiscard]] Rect cell_rect(std::size_t cell) const {
    const auto [i, j] = cell_ij(cell);
    const double x0 = bounds_.xmin + i * hx_;
    const double y0 = bounds_.ymin + j * hy_;
    return {x0, x0 + hx_, y0, y0 + hy_};
  }

  /// Cell containing p. Points on a shared edge go to the lower-indexed cell;
  /// points outside the domain are clamped to the nearest cell.
  [[nodiscard]] std::size_t locate(Point2 p) const {
    return cell_index(locate_axis(p.x, bounds_.xmin, hx_, nx_),
                      locate_axis(p.y, bounds_.ymin, hy_, ny_));
  }

  /// Reference coordinates of p within the given cell.
  [[nodiscard]] Point2 to_reference(std::size_t cell, Point2 p) const {
    const Rect r = cell_rect(cell);
    return {(p.x - r.xmin) / hx_, (p.y - r.ymin) / hy_};
  }

private:
  static int locate_axis(double v, double lo, double h, int n) {
    const double t = (v - lo) / h;
    auto i = static_cast<int>(std::floor(t));
    if (i > 0 && static_cast<double>(i) == t) {
      --i;
    }
    if (i < 0) {
      i = 0;
    }
    if (i >= n) {
      i = n - 1;
    }
    return i;
  }

  Rect bounds_;
  int nx_;
  int ny_;
  double hx_ = 0.0;
  double hy_ = 0.0;
};

inline RectGrid build_grid(Rect bounds, int nx, int ny) { return RectGrid(bounds, nx, ny); }

/// Square grid with n cells per axis on [-1,1]^2.
inline RectGrid unit_box_grid(int n) { return RectGrid({-1.0, 1.0, -1.0, 1.0}, n, n); }

/// Multi-indices of the nodal degrees of freedom: value, d/dx, d/dy, d2/dxdy.
inline constexpr std::array<std::array<int, 2>, 4> kDofMultiIndices{{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};

inline constexpr std::ptrdiff_t kConstrained = -1;

/// Bogner-Fox-Schmit numbering: node-major, multi-index minor. All four DOFs
/// of a boundary node are eliminated (homogeneous clamped conditions).
class DofMap {
public:
  explicit DofMap(const RectGrid& grid) : n_total_(4 * grid.num_nodes()) {
    free_of_global_.assign(n_total_, kConstrained);
    dirichlet_.assign(n_total_, false);
    for (std::size_t node = 0; node < grid.num_nodes(); ++node) {
      const bool boundary = grid.on_boundary(node);
      for (std::size_t a = 0; a < 4; ++a) {
        const std::size_t g = 4 * node + a;
        dirichlet_[g] = boundary;
        if (!boundary) {
          free_of_global_[g] = static_cast<std::ptrdiff_t>(global_of_free_.size());
          global_of_free_.push_back(g);
        }
      }
    }
  }

  [[nodiscard]] std::size_t num_total() const { return n_total_; }
  [[nodiscard]] std::size_t num_free() const { return global_of_free_.size(); }

  [[nodiscard]] static std::size_t global_index(std::size_t node, std::size_t alpha) {
    return 4 * node + alpha;
  }
  [[nodiscard]] static std::size_t node_of(std::size_t global) { return global / 4; }
  [[nodiscard]] static std::size_t alpha_of(std::size_t global) { return global % 4; }

  [[nodiscard]] bool is_dirichlet(std::size_t global) const { return dirichlet_[global]; }
  [[nodiscard]] std::ptrdiff_t free_index(std::size_t global) const { return free_of_global_[global]; }
  [[nodiscard]] std::size_t global_of_free(std::size_t free) const { return global_of_free_[free]; }

  /// Global DOFs of a cell in local order 4 * corner + alpha.
  [[nodiscard]] std::array<std::size_t, 16> cell_dofs(const RectGrid& grid, std::size_t cell) const {
    std::array<std::size_t, 16> out{};
    const auto nodes = grid.cell_nodes(cell);
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t a = 0; a < 4; ++a) {
        out[4 * k + a] = global_index(nodes[k], a);
      }
    }
    return out;
  }

  [[nodiscard]] std::array<std::ptrdiff_t, 16> cell_free_dofs(const RectGrid& grid,
                                                              std::size_t cell) const {
    std::array<std::ptrdiff_t, 16> out{};
    const auto dofs = cell_dofs(grid, cell);
    for (std::size_t l = 0; l < 16; ++l) {
      out[l] = free_of_global_[dofs[l]];
    }
    return out;
  }

  template <class FreeVector, class FullVector>
  void expand(const FreeVector& free, FullVector& full) const {
    full.setZero(static_cast<long>(n_total_));
    for (std::size_t f = 0; f < global_of_free_.size(); ++f) {
      full[static_cast<long>(global_of_free_[f])] = free[static_cast<long>(f)];
    }
  }

  template <class FullVector, class FreeVector>
  void restrict_to_free(const FullVector& full, FreeVector& free) const {
    free.resize(static_cast<long>(global_of_free_.size()));
    for (std::size_t f = 0; f < global_of_free_.size(); ++f) {
      free[static_cast<long>(f)] = full[static_cast<long>(global_of_free_[f])];
    }
  }

private:
  std::size_t n_total_;
  std::vector<std::ptrdiff_t> free_of_global_;
  std::vector<std::size_t> global_of_free_;
  std::vector<bool> dirichlet_;
};

inline DofMap build_dofmap(const RectGrid& grid) { return DofMap(grid); }

/// Grid plus its degree-of-freedom numbering.
struct BfsSpace {
  RectGrid grid;
  DofMap dofs;

  explicit BfsSpace(RectGrid g) : grid(g), dofs(grid) {}
};

}  // namespace membrane
