#include "reki/mesh.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace reki {

TriMesh::TriMesh(Eigen::MatrixX2d vertices, TriangleList triangles, std::vector<BoundaryEdge> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)) {
  const Eigen::Index nv = vertices_.rows();
  const Eigen::Index ne = triangles_.rows();
  if (ne == 0) throw std::invalid_argument("TriMesh: no triangles");
  areas_.resize(ne);
  centroids_.resize(ne, 2);
  for (Eigen::Index e = 0; e < ne; ++e) {
    for (int c = 0; c < 3; ++c) {
      if (triangles_(e, c) < 0 || triangles_(e, c) >= nv) throw std::invalid_argument("TriMesh: vertex index out of range");
    }
    const Eigen::RowVector2d p0 = vertices_.row(triangles_(e, 0));
    const Eigen::RowVector2d p1 = vertices_.row(triangles_(e, 1));
    const Eigen::RowVector2d p2 = vertices_.row(triangles_(e, 2));
    const double twice = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    if (!(twice > 0)) throw std::invalid_argument("TriMesh: triangle " + std::to_string(e) + " is degenerate or clockwise");
    areas_[e] = 0.5 * twice;
    centroids_.row(e) = (p0 + p1 + p2) / 3.0;
  }
  for (const auto& edge : boundary_) {
    if (edge.a < 0 || edge.a >= nv || edge.b < 0 || edge.b >= nv) throw std::invalid_argument("TriMesh: boundary edge out of range");
    electrode_count_ = std::max(electrode_count_, edge.electrode + 1);
  }
}

double TriMesh::electrode_length(int k) const {
  double len = 0.0;
  for (const auto& edge : boundary_) {
    if (edge.electrode == k) len += (vertices_.row(edge.a) - vertices_.row(edge.b)).norm();
  }
  return len;
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << "reki-mesh 1\n";
  out << "vertices " << mesh.vertex_count() << '\n';
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) out << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << '\n';
  out << "triangles " << mesh.element_count() << '\n';
  for (Eigen::Index e = 0; e < mesh.element_count(); ++e) {
    out << mesh.triangles()(e, 0) << ' ' << mesh.triangles()(e, 1) << ' ' << mesh.triangles()(e, 2) << '\n';
  }
  out << "boundary " << mesh.boundary().size() << '\n';
  for (const auto& edge : mesh.boundary()) out << edge.a << ' ' << edge.b << ' ' << edge.electrode << '\n';
}

namespace {

Eigen::Index expect_section(std::istream& in, const std::string& name) {
  std::string word;
  Eigen::Index count = -1;
  if (!(in >> word >> count) || word != name || count < 0) throw std::runtime_error("read_mesh: expected section '" + name + "'");
  return count;
}

}  // namespace

TriMesh read_mesh(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "reki-mesh" || version != 1) throw std::runtime_error("read_mesh: bad header");
  const Eigen::Index nv = expect_section(in, "vertices");
  Eigen::MatrixX2d vertices(nv, 2);
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (!(in >> vertices(v, 0) >> vertices(v, 1))) throw std::runtime_error("read_mesh: truncated vertex list");
  }
  const Eigen::Index nt = expect_section(in, "triangles");
  TriangleList tris(nt, 3);
  for (Eigen::Index e = 0; e < nt; ++e) {
    if (!(in >> tris(e, 0) >> tris(e, 1) >> tris(e, 2))) throw std::runtime_error("read_mesh: truncated triangle list");
  }
  const Eigen::Index nb = expect_section(in, "boundary");
  std::vector<BoundaryEdge> boundary(static_cast<std::size_t>(nb));
  for (auto& edge : boundary) {
    if (!(in >> edge.a >> edge.b >> edge.electrode)) throw std::runtime_error("read_mesh: truncated boundary list");
  }
  return TriMesh(std::move(vertices), std::move(tris), std::move(boundary));
}

}  // namespace reki
