#include "reki/grf.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

namespace reki {

namespace {

using Overlaps = std::vector<std::vector<std::pair<int, double>>>;

// overlap[t] lists (source cell, overlap length) for each target cell t along one axis.
Overlaps axis_overlaps(double s0, double s1, int sn, double t0, double t1, int tn) {
  const double sh = (s1 - s0) / sn;
  const double th = (t1 - t0) / tn;
  Overlaps out(static_cast<std::size_t>(tn));
  for (int t = 0; t < tn; ++t) {
    const double a = t0 + t * th;
    const double b = a + th;
    const int first = std::max(0, int((a - s0) / sh) - 1);
    for (int s = first; s < sn; ++s) {
      const double c = s0 + s * sh;
      if (c >= b) break;
      const double len = std::min(b, c + sh) - std::max(a, c);
      if (len > 0) out[std::size_t(t)].push_back({s, len});
    }
  }
  return out;
}

Eigen::VectorXd grid_to_grid(const Grid& src, const Eigen::VectorXd& v, const Grid& dst) {
  const Overlaps ox = axis_overlaps(src.x0, src.x1, src.nx, dst.x0, dst.x1, dst.nx);
  const Overlaps oy = axis_overlaps(src.y0, src.y1, src.ny, dst.y0, dst.y1, dst.ny);
  Eigen::VectorXd out(dst.size());
  for (int J = 0; J < dst.ny; ++J) {
    for (int I = 0; I < dst.nx; ++I) {
      double acc = 0.0;
      double area = 0.0;
      for (const auto& [j, ly] : oy[std::size_t(J)]) {
        for (const auto& [i, lx] : ox[std::size_t(I)]) {
          acc += lx * ly * v[src.index(i, j)];
          area += lx * ly;
        }
      }
      if (area <= 0.0) throw std::invalid_argument("project: target cell does not overlap the source grid");
      out[dst.index(I, J)] = acc / area;
    }
  }
  return out;
}

}  // namespace

Field project(const Field& field, const Discretization& target) {
  const Discretization& source = field.discretization();
  if (same_discretization(source, target)) return field;
  if (std::holds_alternative<MeshHandle>(source)) {
    throw std::invalid_argument("project: mesh fields can only be projected onto their own mesh");
  }
  const Grid& src = std::get<Grid>(source);
  if (const auto* dst = std::get_if<Grid>(&target)) return Field(*dst, grid_to_grid(src, field.values(), *dst));

  const auto& mesh = std::get<MeshHandle>(target);
  const Eigen::MatrixX2d& c = mesh->centroids();
  Eigen::VectorXd out(c.rows());
  for (Eigen::Index e = 0; e < c.rows(); ++e) {
    if (!src.contains(c(e, 0), c(e, 1))) throw std::invalid_argument("project: mesh extends outside the source grid");
    out[e] = interpolate(src, field.values(), c(e, 0), c(e, 1));
  }
  return Field(target, std::move(out));
}

}  // namespace reki
