#pragma once

#include <Eigen/Core>

#include <array>

namespace reki {

/// Uniform cell-centered rectangular grid over [x0,x1] x [y0,y1].
/// Cell (i, j) has linear index j * nx + i (rows run along x).
struct Grid {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  Grid() = default;
  Grid(int nx_, int ny_, double x0_, double x1_, double y0_, double y1_);

  static Grid square(int n, double lo, double hi) { return Grid(n, n, lo, hi, lo, hi); }

  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
  double cell_area() const { return hx() * hy(); }
  Eigen::Index size() const { return Eigen::Index(nx) * ny; }
  Eigen::Index index(int i, int j) const { return Eigen::Index(j) * nx + i; }

  std::array<double, 2> center(int i, int j) const {
    return {x0 + (i + 0.5) * hx(), y0 + (j + 0.5) * hy()};
  }
  std::array<double, 2> center(Eigen::Index k) const {
    return center(int(k % nx), int(k / nx));
  }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }

  bool operator==(const Grid&) const = default;
};

/// Cell centers, one row per cell in linear-index order.
Eigen::MatrixX2d cell_centers(const Grid& grid);

/// Bilinear interpolation of cell-centered values. Points in the half-cell band along
/// the boundary are linearly extrapolated from the nearest interior stencil, so the
/// rule is exact for affine fields everywhere in the domain.
double interpolate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& values, double x, double y);

}  // namespace reki
