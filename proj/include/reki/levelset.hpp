#pragma once

#include "reki/field.hpp"
#include "reki/forward_model.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace reki {

/// kappa(u) = kappa_inside where u <= 0, kappa_outside where u > 0.
struct LevelSetMap {
  double kappa_inside = 10.0;
  double kappa_outside = 1.0;

  void validate() const;
};

Field to_conductivity(const Field& u, const LevelSetMap& map);
Eigen::VectorXd to_log_conductivity(const Eigen::VectorXd& u, const LevelSetMap& map);

/// Number of cell faces across which u changes class, times the face length.
double interface_length(const Field& u);

/// Area fraction where the estimate's class disagrees with the truth.
/// `truth_inside` holds, per cell, the fraction of the cell inside the true region.
double misclassified_fraction(const Field& u, const Field& truth_inside);

/// Geometric primitives for prescribed truths.
struct Shape {
  enum class Kind { Disk, Band };
  Kind kind = Kind::Disk;
  // Disk: centre (cx, cy), radius r.
  double cx = 0.0, cy = 0.0, r = 0.0;
  // Band: y_lo + slope x <= y <= y_hi + slope x.
  double y_lo = 0.0, y_hi = 0.0, slope = 0.0;

  static Shape disk(double cx, double cy, double r);
  static Shape band(double y_lo, double y_hi, double slope = 0.0);

  bool contains(double x, double y) const;
};

bool inside_any(const std::vector<Shape>& shapes, double x, double y);

/// Per-cell area fraction inside the union of shapes, by sub x sub midpoint sampling.
Field inside_fraction(const std::vector<Shape>& shapes, const Grid& grid, int sub = 8);

/// log kappa_inside inside the shapes, log kappa_outside elsewhere, evaluated at
/// cell centres or element centroids.
Field shapes_to_log_conductivity(const std::vector<Shape>& shapes, const Discretization& disc, const LevelSetMap& map);

/// Wraps a log-conductivity model so that it takes a level-set function.
std::shared_ptr<ForwardModel> make_level_set_model(std::shared_ptr<const ForwardModel> inner, const LevelSetMap& map);

}  // namespace reki
