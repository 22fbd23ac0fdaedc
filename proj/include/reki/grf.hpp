#pragma once

#include "reki/field.hpp"
#include "reki/grid.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reki {

enum class Family { Spherical, WhittleMatern, LaplacianPower };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Covariance operator of a Gaussian random field.
///   Spherical:      c0 [1 - 3h/(2a) + h^3/(2a^3)] for h < a, 0 otherwise
///   WhittleMatern:  omega L^2 (I - L^2 Laplacian)^(-theta), Neumann boundary
///   LaplacianPower: omega (-Laplacian)^(-theta) on mean-zero functions
struct CovarianceSpec {
  Family family = Family::Spherical;
  double c0 = 1.0;
  double a = 1.0;
  double L = 0.2;
  double theta = 5.0;
  double omega = 0.1;

  static CovarianceSpec spherical(double c0, double a);
  static CovarianceSpec whittle_matern(double L = 0.2, double theta = 5.0, double omega = 0.1);
  static CovarianceSpec laplacian_power(double theta = 2.0, double omega = 1.0);

  /// Throws std::invalid_argument for non-finite or non-positive parameters.
  void validate() const;
};

double spherical_kernel(double h, double c0, double a);

/// 1D eigenvalues (4/h^2) sin^2(p pi / 2n) of the cell-centered Neumann Laplacian.
Eigen::VectorXd neumann_eigenvalues_1d(int n, double h);

/// Sparse-free dense 5-point Neumann Laplacian (negative semidefinite); test helper sized for small grids.
Eigen::MatrixXd neumann_laplacian(const Grid& grid);

/// Covariance operator on grid functions. For Spherical, entry (i,j) is
/// w c(x_i, x_j) with w the cell area; the spectral families are assembled
/// from the Laplacian eigenbasis. Eigenvalues of the result are the KL
/// eigenvalues of the continuous operator.
Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec, const Grid& grid);

/// How many modes to keep: either a fixed count or the smallest prefix
/// reaching a fraction of the trace.
struct Truncation {
  std::optional<Eigen::Index> count;
  double trace_fraction = 0.999;

  static Truncation modes(Eigen::Index k) { return {k, 1.0}; }
  static Truncation fraction(double f) { return {std::nullopt, f}; }
};

/// Truncated KL basis on a grid. `eigenvectors` columns are orthonormal in
/// the Euclidean inner product; the L2-normalized eigenfunctions are
/// `sample_scale * eigenvectors`.
struct KLBasis {
  Grid grid;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  double sample_scale = 1.0;
  std::optional<CovarianceSpec> spec;
  /// Cosine mode indices (p, q) for the spectral families, empty otherwise.
  std::vector<std::array<int, 2>> modes;

  Eigen::Index truncation() const { return eigenvalues.size(); }
  /// Eigenfunctions scaled to unit discrete L2 norm.
  Eigen::MatrixXd l2_eigenfunctions() const { return sample_scale * eigenvectors; }
};

/// Eigendecomposition of a symmetric PSD covariance matrix on `grid`.
KLBasis kl_decompose(const Eigen::MatrixXd& covariance, const Grid& grid, const Truncation& truncation = {});

/// KL basis for a spec. Spectral families use the analytic cosine eigenbasis;
/// Spherical assembles the matrix and calls kl_decompose.
KLBasis kl_basis(const CovarianceSpec& spec, const Grid& grid, const Truncation& truncation = {});

/// Standard normal KL coefficients for sample `index`. Mode k of sample i is
/// the same draw for every basis, so two specs can share one realization.
Eigen::VectorXd kl_coefficients(std::uint64_t seed, std::uint64_t index, Eigen::Index modes);

/// sum_k sqrt(lambda_k) xi_k phi_k on the basis grid.
Eigen::VectorXd synthesize(const KLBasis& basis, const Eigen::VectorXd& xi);

/// Samples first, first+1, ..., first+count-1 as matrix columns (OpenMP over samples).
Eigen::MatrixXd sample_matrix(const KLBasis& basis, std::uint64_t seed, Eigen::Index count, std::uint64_t first = 0);

std::vector<Field> sample(const KLBasis& basis, std::uint64_t seed, Eigen::Index count);

/// Evaluates the field with coefficients `xi` at arbitrary points: Nystrom
/// extension for Spherical, exact cosine evaluation for spectral families.
/// Agrees with synthesize() at cell centers.
Eigen::VectorXd synthesize_at(const KLBasis& basis, const Eigen::VectorXd& xi, const Eigen::MatrixX2d& points);

/// Transfers a field: grid to grid by area-overlap averaging, grid to mesh by
/// bilinear evaluation at element centroids, identity on equal discretizations.
Field project(const Field& field, const Discretization& target);

namespace serial {
Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec, const Grid& grid);
Eigen::MatrixXd sample_matrix(const KLBasis& basis, std::uint64_t seed, Eigen::Index count, std::uint64_t first = 0);
}  // namespace serial

}  // namespace reki
