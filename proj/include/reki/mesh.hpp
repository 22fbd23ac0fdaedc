#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace reki {

/// Boundary edge of a triangulation. `electrode` is the electrode index or -1 for gaps.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int electrode = -1;
};

using TriangleList = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Counter-clockwise triangulation with tagged boundary edges.
class TriMesh {
 public:
  TriMesh(Eigen::MatrixX2d vertices, TriangleList triangles, std::vector<BoundaryEdge> boundary);

  const Eigen::MatrixX2d& vertices() const { return vertices_; }
  const TriangleList& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }

  Eigen::Index vertex_count() const { return vertices_.rows(); }
  Eigen::Index element_count() const { return triangles_.rows(); }
  int electrode_count() const { return electrode_count_; }

  double area(Eigen::Index e) const { return areas_[e]; }
  const Eigen::VectorXd& areas() const { return areas_; }
  const Eigen::MatrixX2d& centroids() const { return centroids_; }

  /// Total length of the boundary edges tagged with electrode k.
  double electrode_length(int k) const;

 private:
  Eigen::MatrixX2d vertices_;
  TriangleList triangles_;
  std::vector<BoundaryEdge> boundary_;
  Eigen::VectorXd areas_;
  Eigen::MatrixX2d centroids_;
  int electrode_count_ = 0;
};

/// ASCII mesh format:
///
///     reki-mesh 1
///     vertices <N>
///     <x> <y>            (N lines)
///     triangles <T>
///     <a> <b> <c>        (T lines, zero-based, counter-clockwise)
///     boundary <E>
///     <a> <b> <tag>      (E lines, tag = electrode index or -1)
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in);

}  // namespace reki
