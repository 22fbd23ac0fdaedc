#pragma once

#include "reki/grid.hpp"
#include "reki/mesh.hpp"

#include <Eigen/Core>

#include <memory>
#include <variant>

namespace reki {

using MeshHandle = std::shared_ptr<const TriMesh>;

/// A field lives either on a structured grid (one value per cell) or on a
/// triangle mesh (one value per element).
using Discretization = std::variant<Grid, MeshHandle>;

Eigen::Index discretization_size(const Discretization& disc);

/// Cell areas or element areas.
Eigen::VectorXd quadrature_weights(const Discretization& disc);

/// Cell centers or element centroids.
Eigen::MatrixX2d sample_points(const Discretization& disc);

bool same_discretization(const Discretization& a, const Discretization& b);

/// Scalar function on a discretization. Values are validated finite on construction.
class Field {
 public:
  Field(Discretization disc, Eigen::VectorXd values);

  static Field constant(const Discretization& disc, double value);

  const Discretization& discretization() const { return disc_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  const Grid& grid() const;  // throws if not grid-based

 private:
  Discretization disc_;
  Eigen::VectorXd values_;
};

/// Discrete L2 norm weighted by the quadrature weights of `disc`.
double l2_norm(const Discretization& disc, const Eigen::Ref<const Eigen::VectorXd>& values);

/// ||a - b||_{L2} / ||b||_{L2}.
double relative_l2_error(const Discretization& disc,
                         const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace reki
