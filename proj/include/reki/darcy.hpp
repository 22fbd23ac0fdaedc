#pragma once

#include "reki/field.hpp"
#include "reki/forward_model.hpp"
#include "reki/grid.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>

namespace reki {

enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };
enum class BoundaryKind { Dirichlet, Flux };

/// Dirichlet: prescribed head. Flux: prescribed inward flux density
/// k grad(h) . n_out, so a positive value injects water.
struct BoundaryCondition {
  using Profile = std::function<double(double x, double y)>;

  BoundaryKind kind = BoundaryKind::Flux;
  Profile value = [](double, double) { return 0.0; };

  static BoundaryCondition dirichlet(double head);
  static BoundaryCondition dirichlet(Profile head);
  static BoundaryCondition flux(double inward);
  static BoundaryCondition flux(Profile inward);
};

/// Steady Darcy flow -div(k grad h) = f on a cell-centered grid.
struct DarcyProblem {
  Grid grid;
  Eigen::VectorXd source;  // cell averages of f
  std::array<BoundaryCondition, 4> bc;

  /// The confined aquifer on [0,6]^2: layered source, h = 100 at the bottom,
  /// inflow 500 on the left, no flow on the right and top.
  static DarcyProblem standard(int n);

  BoundaryCondition& side(Side s) { return bc[std::size_t(s)]; }
  const BoundaryCondition& side(Side s) const { return bc[std::size_t(s)]; }
};

/// f = 0 on (0,4], 137 on (4,5), 274 on [5,6).
double layered_source_value(double y);

/// Exact cell averages of the layered source.
Eigen::VectorXd layered_source(const Grid& grid);

struct MeasurementLayout {
  Eigen::MatrixX2d points;

  /// n x n interior lattice with coordinates lo + (hi - lo)(k + 1)/(n + 1).
  static MeasurementLayout lattice(int n, double lo = 0.0, double hi = 6.0);

  Eigen::Index size() const { return points.rows(); }
  /// Throws unless every point lies strictly inside the grid.
  void validate(const Grid& grid) const;
};

struct DarcySystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

/// Two-point flux assembly with harmonic-mean face conductivities.
DarcySystem assemble(const Eigen::VectorXd& logk, const DarcyProblem& problem);

/// Solves for the head; the relative residual of the linear system is checked against 1e-10.
Field solve_head(const Field& logk, const DarcyProblem& problem);

/// Bilinear interpolation of the head at the layout points.
Eigen::VectorXd observe(const Field& head, const MeasurementLayout& layout);

/// Discrete mass balance: outflow through Dirichlet faces against sources plus prescribed inflow.
struct FluxBalance {
  double dirichlet_outflow = 0.0;
  double prescribed_inflow = 0.0;
  double source_integral = 0.0;

  double relative_defect() const;
};

FluxBalance flux_balance(const Field& head, const Field& logk, const DarcyProblem& problem);

/// G(u) = head at the layout points for log-conductivity u.
class DarcyModel final : public ForwardModel {
 public:
  DarcyModel(DarcyProblem problem, MeasurementLayout layout);

  Eigen::Index input_size() const override { return problem_.grid.size(); }
  Eigen::Index output_size() const override { return layout_.size(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& logk) const override;

  const DarcyProblem& problem() const { return problem_; }
  const MeasurementLayout& layout() const { return layout_; }

 private:
  DarcyProblem problem_;
  MeasurementLayout layout_;
};

}  // namespace reki
