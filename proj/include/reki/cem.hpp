#pragma once

#include "reki/field.hpp"
#include "reki/forward_model.hpp"
#include "reki/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <memory>
#include <vector>

namespace reki {

/// Polar mesh of the unit disk: a center vertex plus `rings` concentric rings,
/// ring k carrying an even vertex count close to outer_vertices * k / rings.
/// The mesh is mirror-symmetric about the x-axis.
struct DiskMeshOptions {
  int rings = 12;
  int outer_vertices = 128;
  int electrodes = 16;
  /// Fraction of the circumference covered by electrodes. Electrode k is
  /// centered at angle 2 pi k / electrodes; boundary edges are assigned by
  /// midpoint, so the realized coverage is exact only when outer_vertices is
  /// a multiple of 4 * electrodes.
  double coverage = 0.5;
  /// In [0, 1): compresses the angular spacing at electrode endpoints by
  /// (1 - edge_clustering), where the current density is singular.
  double edge_clustering = 0.6;
  /// Ring k sits at radius 1 - (1 - k/rings)^radial_grading; values above 1
  /// pack rings toward the electrodes.
  double radial_grading = 1.75;
};

TriMesh make_disk_mesh(const DiskMeshOptions& options);

/// Number of triangles make_disk_mesh would produce.
Eigen::Index disk_mesh_element_count(int rings, int outer_vertices, double radial_grading = 1.0);

/// Copies `shape` and picks the ring count whose element count is closest to `target`.
DiskMeshOptions disk_mesh_for_target(Eigen::Index target, const DiskMeshOptions& shape = {});

/// Electrode coverage actually realized by the tagged boundary edges.
double realized_coverage(const TriMesh& mesh);

struct CemSetup {
  MeshHandle mesh;
  Eigen::VectorXd contact_impedance;  // one per electrode
  Eigen::MatrixXd patterns;           // electrodes x patterns, column = injected currents

  /// Adjacent-pair patterns: pattern p injects +1 on electrode p and -1 on p+1.
  static CemSetup adjacent(MeshHandle mesh, double z = 0.01);

  int electrodes() const { return int(contact_impedance.size()); }
  Eigen::Index pattern_count() const { return patterns.cols(); }

  /// Throws if impedances are not positive, a pattern violates charge
  /// conservation, or the mesh has no electrode edges.
  void validate() const;
};

struct CemSolution {
  Eigen::VectorXd v;  // vertex potentials
  Eigen::VectorXd V;  // electrode voltages, summing to zero
};

/// Symmetric CEM system over [vertex potentials; electrode voltages]. Without
/// the gauge it is positive semidefinite with the constants as null space.
Eigen::SparseMatrix<double> assemble_cem_matrix(const Field& logk, const CemSetup& setup, bool gauge = true);

/// Solves every pattern of `setup` with one factorization. `logk` holds one value per element.
std::vector<CemSolution> assemble_and_solve(const Field& logk, const CemSetup& setup);

/// Same, for an explicit pattern matrix (validated for charge conservation).
std::vector<CemSolution> solve_patterns(const Field& logk, const CemSetup& setup, const Eigen::MatrixXd& patterns);

/// Pattern-major concatenation: solutions[p].V[k] lands at index p * electrodes + k.
Eigen::VectorXd observe_voltages(const std::vector<CemSolution>& solutions);

/// Electrode currents (1/z_k) int_{e_k} (V_k - v) ds recomputed from a solution.
Eigen::VectorXd electrode_currents(const CemSolution& solution, const CemSetup& setup);

/// int k |grad v|^2 + sum_k (1/z_k) int_{e_k} (v - V_k)^2, by a separate element loop.
double dissipated_power(const CemSolution& solution, const Field& logk, const CemSetup& setup);

/// G(u) = electrode voltages for every pattern, with u the element log-conductivity.
class CemModel final : public ForwardModel {
 public:
  explicit CemModel(CemSetup setup);

  Eigen::Index input_size() const override { return setup_.mesh->element_count(); }
  Eigen::Index output_size() const override { return setup_.pattern_count() * setup_.electrodes(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& logk) const override;

  const CemSetup& setup() const { return setup_; }

 private:
  CemSetup setup_;
};

}  // namespace reki
