#include "reki/cem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace reki {

namespace {

double ring_radius(int k, int rings, double grading) { return 1.0 - std::pow(1.0 - double(k) / rings, grading); }

std::vector<int> ring_counts(int rings, int outer, double grading) {
  std::vector<int> n(std::size_t(rings) + 1, 0);
  for (int k = 1; k <= rings; ++k) {
    const double target = double(outer) * ring_radius(k, rings, grading);
    n[std::size_t(k)] = std::max(4, 2 * int(std::lround(target / 2.0)));
  }
  n[std::size_t(rings)] = outer;
  return n;
}

// Angular map, in units of the electrode pitch: odd, pitch-periodic, fixing the
// electrode endpoints +-c/2 and compressing spacing there by (1 - beta).
double warp(double s, double c, double beta) {
  if (beta == 0.0) return s;
  const double period = std::floor(s);
  double r = s - period;
  bool flip = false;
  if (r > 0.5) {
    r = 1.0 - r;
    flip = true;
  }
  auto g = [beta](double x) { return x + beta / std::numbers::pi * std::sin(std::numbers::pi * x); };
  const double e = 0.5 * c;
  double m;
  if (r <= e) {
    m = e * g(r / e);
  } else {
    const double w = 0.5 - e;
    m = e + w * (1.0 - g(1.0 - (r - e) / w));
  }
  return period + (flip ? 1.0 - m : m);
}

}  // namespace

Eigen::Index disk_mesh_element_count(int rings, int outer_vertices, double radial_grading) {
  const auto n = ring_counts(rings, outer_vertices, radial_grading);
  Eigen::Index count = n[1];
  for (int k = 2; k <= rings; ++k) count += n[std::size_t(k) - 1] + n[std::size_t(k)];
  return count;
}

TriMesh make_disk_mesh(const DiskMeshOptions& o) {
  if (o.rings < 1) throw std::invalid_argument("make_disk_mesh: need at least one ring");
  if (o.outer_vertices < 4 || o.outer_vertices % 2) throw std::invalid_argument("make_disk_mesh: outer vertex count must be even and >= 4");
  if (o.electrodes < 2) throw std::invalid_argument("make_disk_mesh: need at least two electrodes");
  if (!(o.coverage > 0.0 && o.coverage < 1.0)) throw std::invalid_argument("make_disk_mesh: coverage must lie in (0, 1)");
  if (!(o.edge_clustering >= 0.0 && o.edge_clustering < 1.0)) throw std::invalid_argument("make_disk_mesh: edge clustering must lie in [0, 1)");
  if (!(o.radial_grading >= 1.0)) throw std::invalid_argument("make_disk_mesh: radial grading must be >= 1");
  if (o.electrodes % 2) throw std::invalid_argument("make_disk_mesh: electrode count must be even");
  const auto n = ring_counts(o.rings, o.outer_vertices, o.radial_grading);
  // Angle of vertex i on a ring with nk vertices, as a fraction of the full turn.
  auto turn = [&](int i, int nk) { return warp(double(o.electrodes) * i / nk, o.coverage, o.edge_clustering) / o.electrodes; };

  std::vector<int> offset(n.size(), 0);
  int nv = 1;
  for (int k = 1; k <= o.rings; ++k) {
    offset[std::size_t(k)] = nv;
    nv += n[std::size_t(k)];
  }
  Eigen::MatrixX2d p(nv, 2);
  p.row(0).setZero();
  for (int k = 1; k <= o.rings; ++k) {
    const int nk = n[std::size_t(k)];
    const double r = ring_radius(k, o.rings, o.radial_grading);
    for (int i = 0; i <= nk / 2; ++i) {
      const double t = 2.0 * std::numbers::pi * turn(i, nk);
      const double x = r * std::cos(t);
      double y = r * std::sin(t);
      if (i == 0 || 2 * i == nk) y = 0.0;
      p(offset[std::size_t(k)] + i, 0) = x;
      p(offset[std::size_t(k)] + i, 1) = y;
      if (i > 0 && 2 * i < nk) {
        p(offset[std::size_t(k)] + nk - i, 0) = x;
        p(offset[std::size_t(k)] + nk - i, 1) = -y;
      }
    }
  }
  auto vid = [&](int k, int i) { return offset[std::size_t(k)] + ((i % n[std::size_t(k)]) + n[std::size_t(k)]) % n[std::size_t(k)]; };
  // Upper-half triangles are built first; each is mirrored to keep the mesh symmetric.
  std::vector<std::array<int, 3>> upper;
  for (int i = 0; i < n[1] / 2; ++i) upper.push_back({0, vid(1, i), vid(1, i + 1)});
  for (int k = 2; k <= o.rings; ++k) {
    const int ni = n[std::size_t(k) - 1], no = n[std::size_t(k)];
    int a = 0, b = 0;
    while (a < ni / 2 || b < no / 2) {
      const double ta = (a < ni / 2) ? turn(a + 1, ni) : 2.0;
      const double tb = (b < no / 2) ? turn(b + 1, no) : 2.0;
      if (ta < tb) {
        upper.push_back({vid(k - 1, a), vid(k, b), vid(k - 1, a + 1)});
        ++a;
      } else {
        upper.push_back({vid(k - 1, a), vid(k, b), vid(k, b + 1)});
        ++b;
      }
    }
  }
  auto mirror = [&](int v) {
    if (v == 0) return 0;
    int k = 1;
    while (k < o.rings && v >= offset[std::size_t(k) + 1]) ++k;
    return vid(k, -(v - offset[std::size_t(k)]));
  };
  auto orient = [&](std::array<int, 3> t) {
    const double twice = (p(t[1], 0) - p(t[0], 0)) * (p(t[2], 1) - p(t[0], 1)) - (p(t[2], 0) - p(t[0], 0)) * (p(t[1], 1) - p(t[0], 1));
    if (twice < 0) std::swap(t[1], t[2]);
    return t;
  };
  TriangleList tris(Eigen::Index(2 * upper.size()), 3);
  Eigen::Index e = 0;
  for (const auto& t : upper) {
    const auto a = orient(t);
    tris.row(e++) << a[0], a[1], a[2];
  }
  for (const auto& t : upper) {
    const auto a = orient({mirror(t[0]), mirror(t[1]), mirror(t[2])});
    tris.row(e++) << a[0], a[1], a[2];
  }

  const int no = o.outer_vertices;
  const double pitch = 2.0 * std::numbers::pi / o.electrodes;
  const double half_width = 0.5 * o.coverage * pitch;
  std::vector<BoundaryEdge> boundary;
  boundary.reserve(std::size_t(no));
  for (int i = 0; i < no; ++i) {
    const double mid = std::numbers::pi * (turn(i, no) + turn(i + 1, no));
    const int k = int(std::lround(mid / pitch)) % o.electrodes;
    double d = std::abs(mid - k * pitch);
    d = std::min(d, 2.0 * std::numbers::pi - d);
    boundary.push_back({vid(o.rings, i), vid(o.rings, i + 1), d < half_width ? k : -1});
  }
  return TriMesh(std::move(p), std::move(tris), std::move(boundary));
}

DiskMeshOptions disk_mesh_for_target(Eigen::Index target, const DiskMeshOptions& shape) {
  DiskMeshOptions best = shape;
  Eigen::Index best_gap = std::numeric_limits<Eigen::Index>::max();
  for (int r = 1; r <= 4 * shape.outer_vertices; ++r) {
    const Eigen::Index gap = std::abs(disk_mesh_element_count(r, shape.outer_vertices, shape.radial_grading) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best.rings = r;
    }
  }
  return best;
}

double realized_coverage(const TriMesh& mesh) {
  double tagged = 0.0, total = 0.0;
  for (const auto& edge : mesh.boundary()) {
    const double len = (mesh.vertices().row(edge.a) - mesh.vertices().row(edge.b)).norm();
    total += len;
    if (edge.electrode >= 0) tagged += len;
  }
  return total > 0 ? tagged / total : 0.0;
}

}  // namespace reki
