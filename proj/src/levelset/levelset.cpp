#include "reki/levelset.hpp"

#include <cmath>
#include <stdexcept>

namespace reki {

void LevelSetMap::validate() const {
  auto ok = [](double k) { return std::isfinite(k) && k > 0; };
  if (!ok(kappa_inside) || !ok(kappa_outside)) throw std::invalid_argument("LevelSetMap: conductivities must be positive and finite");
  if (kappa_inside == kappa_outside) throw std::invalid_argument("LevelSetMap: inside and outside conductivities coincide");
}

Eigen::VectorXd to_log_conductivity(const Eigen::VectorXd& u, const LevelSetMap& map) {
  map.validate();
  const double li = std::log(map.kappa_inside);
  const double le = std::log(map.kappa_outside);
  return u.unaryExpr([li, le](double v) { return v <= 0.0 ? li : le; });
}

Field to_conductivity(const Field& u, const LevelSetMap& map) {
  map.validate();
  const double ki = map.kappa_inside;
  const double ke = map.kappa_outside;
  return Field(u.discretization(), u.values().unaryExpr([ki, ke](double v) { return v <= 0.0 ? ki : ke; }));
}

double interface_length(const Field& u) {
  const Grid& g = u.grid();
  const auto& v = u.values();
  auto in = [&](int i, int j) { return v[g.index(i, j)] <= 0.0; };
  double len = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i + 1 < g.nx && in(i, j) != in(i + 1, j)) len += g.hy();
      if (j + 1 < g.ny && in(i, j) != in(i, j + 1)) len += g.hx();
    }
  }
  return len;
}

double misclassified_fraction(const Field& u, const Field& truth_inside) {
  if (!same_discretization(u.discretization(), truth_inside.discretization())) {
    throw std::invalid_argument("misclassified_fraction: fields live on different discretizations");
  }
  const Eigen::VectorXd w = quadrature_weights(u.discretization());
  double bad = 0.0;
  for (Eigen::Index c = 0; c < w.size(); ++c) {
    const double est = u.values()[c] <= 0.0 ? 1.0 : 0.0;
    bad += w[c] * std::abs(est - truth_inside.values()[c]);
  }
  return bad / w.sum();
}

Shape Shape::disk(double cx, double cy, double r) {
  if (!(r > 0)) throw std::invalid_argument("Shape: disk radius must be positive");
  Shape s;
  s.kind = Kind::Disk;
  s.cx = cx;
  s.cy = cy;
  s.r = r;
  return s;
}

Shape Shape::band(double y_lo, double y_hi, double slope) {
  if (!(y_hi > y_lo)) throw std::invalid_argument("Shape: band needs y_hi > y_lo");
  Shape s;
  s.kind = Kind::Band;
  s.y_lo = y_lo;
  s.y_hi = y_hi;
  s.slope = slope;
  return s;
}

bool Shape::contains(double x, double y) const {
  if (kind == Kind::Disk) return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  return y >= y_lo + slope * x && y <= y_hi + slope * x;
}

bool inside_any(const std::vector<Shape>& shapes, double x, double y) {
  for (const auto& s : shapes) {
    if (s.contains(x, y)) return true;
  }
  return false;
}

Field inside_fraction(const std::vector<Shape>& shapes, const Grid& grid, int sub) {
  if (sub < 1) throw std::invalid_argument("inside_fraction: sub must be positive");
  Eigen::VectorXd f(grid.size());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      int hits = 0;
      for (int b = 0; b < sub; ++b) {
        for (int a = 0; a < sub; ++a) {
          const double x = grid.x0 + (i + (a + 0.5) / sub) * grid.hx();
          const double y = grid.y0 + (j + (b + 0.5) / sub) * grid.hy();
          hits += inside_any(shapes, x, y) ? 1 : 0;
        }
      }
      f[grid.index(i, j)] = double(hits) / (sub * sub);
    }
  }
  return Field(grid, std::move(f));
}

Field shapes_to_log_conductivity(const std::vector<Shape>& shapes, const Discretization& disc, const LevelSetMap& map) {
  map.validate();
  const Eigen::MatrixX2d pts = sample_points(disc);
  Eigen::VectorXd v(pts.rows());
  for (Eigen::Index c = 0; c < pts.rows(); ++c) {
    v[c] = std::log(inside_any(shapes, pts(c, 0), pts(c, 1)) ? map.kappa_inside : map.kappa_outside);
  }
  return Field(disc, std::move(v));
}

std::shared_ptr<ForwardModel> make_level_set_model(std::shared_ptr<const ForwardModel> inner, const LevelSetMap& map) {
  map.validate();
  return std::make_shared<MappedModel>(std::move(inner), [map](const Eigen::VectorXd& u) { return to_log_conductivity(u, map); });
}

}  // namespace reki
