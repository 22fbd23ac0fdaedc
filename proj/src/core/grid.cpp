#include "reki/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reki {

Grid::Grid(int nx_, int ny_, double x0_, double x1_, double y0_, double y1_)
    : nx(nx_), ny(ny_), x0(x0_), x1(x1_), y0(y0_), y1(y1_) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("Grid: need at least one cell per direction");
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("Grid: empty extent");
}

Eigen::MatrixX2d cell_centers(const Grid& grid) {
  Eigen::MatrixX2d pts(grid.size(), 2);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const auto c = grid.center(i, j);
      pts(grid.index(i, j), 0) = c[0];
      pts(grid.index(i, j), 1) = c[1];
    }
  }
  return pts;
}

namespace {

// Base index and fractional offset along one axis; offset may leave [0, 1]
// in the boundary half-cells (linear extrapolation).
std::pair<int, double> stencil(double coord, double lo, double h, int n) {
  if (n == 1) return {0, 0.0};
  const double f = (coord - lo) / h - 0.5;
  const int i0 = std::clamp(int(std::floor(f)), 0, n - 2);
  return {i0, f - i0};
}

}  // namespace

double interpolate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& values, double x, double y) {
  if (values.size() != grid.size()) throw std::invalid_argument("interpolate: value count does not match grid");
  if (!grid.contains(x, y)) throw std::out_of_range("interpolate: point outside grid domain");
  const auto [i0, tx] = stencil(x, grid.x0, grid.hx(), grid.nx);
  const auto [j0, ty] = stencil(y, grid.y0, grid.hy(), grid.ny);
  const int i1 = grid.nx == 1 ? i0 : i0 + 1;
  const int j1 = grid.ny == 1 ? j0 : j0 + 1;
  const double v00 = values[grid.index(i0, j0)];
  const double v10 = values[grid.index(i1, j0)];
  const double v01 = values[grid.index(i0, j1)];
  const double v11 = values[grid.index(i1, j1)];
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

}  // namespace reki
