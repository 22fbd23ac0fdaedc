#pragma once

#include "reki/eki.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace reki {

/// Affine coefficient space u = origin + basis a with prior covariance C on a.
struct ReducedSpace {
  Discretization disc;
  Eigen::VectorXd origin;
  Eigen::MatrixXd basis;      // n x K
  Eigen::MatrixXd prior_cov;  // K x K, SPD

  /// The span of the ensemble deviations around its mean, with C = I / (N_e - 1) so that
  /// basis C basis^T is the ensemble covariance.
  static ReducedSpace from_ensemble(const Ensemble& ens);

  Eigen::Index dim() const { return basis.cols(); }
  Eigen::VectorXd lift(const Eigen::VectorXd& coeffs) const;
  void validate() const;
};

/// Central differences of G(origin + basis a) in each coefficient, with step h_k = step sqrt(C_kk).
/// 2K forward evaluations, run concurrently.
Eigen::MatrixXd finite_difference_jacobian(const ForwardModel& model, const ReducedSpace& space,
                                           const Eigen::VectorXd& coeffs, double step);

/// Increment C J^T (J C J^T + alpha Gamma)^{-1} r.
Eigen::VectorXd lm_increment(const Eigen::MatrixXd& J, const Eigen::MatrixXd& C, const Eigen::VectorXd& gamma_diag,
                             const Eigen::VectorXd& r, double alpha);

/// Same increment from the normal equations (J^T Gamma^{-1} J + alpha C^{-1}) v = J^T Gamma^{-1} r.
Eigen::VectorXd lm_increment_normal(const Eigen::MatrixXd& J, const Eigen::MatrixXd& C, const Eigen::VectorXd& gamma_diag,
                                    const Eigen::VectorXd& r, double alpha);

struct LmStep {
  Eigen::VectorXd coeffs;
  AlphaSelection alpha;
};

/// One regularized step from `coeffs` given the Jacobian and residual there.
LmStep lm_step(const ReducedSpace& space, const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& J,
               const Eigen::VectorXd& residual, const ObservationSet& obs, const EkiConfig& cfg, double alpha_seed);

struct LmConfig {
  EkiConfig eki;
  double fd_step = 1e-5;
};

struct LmResult {
  Field estimate;
  Eigen::VectorXd coeffs;
  std::vector<IterationRecord> records;
  bool converged = false;
};

/// Starts at a = 0 and stops at the first iterate with |Gamma^{-1/2}(y - G(u_n))| <= tau eta.
/// forward_evals counts the residual evaluation plus the 2K Jacobian evaluations per step.
LmResult run_lm(const ReducedSpace& space, const ForwardModel& model, const ObservationSet& obs, const LmConfig& cfg,
                const RunOptions& opts = {});

struct ComparisonRow {
  int n = 0;
  double eki_misfit = 0.0;
  double lm_misfit = 0.0;
  double eki_error = 0.0;
  double lm_error = 0.0;
};

struct RunComparison {
  std::vector<ComparisonRow> rows;  // NaN where one run has already stopped
  IterationRecord eki_final;
  IterationRecord lm_final;
  /// Ratio of the larger to the smaller terminal misfit.
  double terminal_misfit_ratio() const;
};

RunComparison compare_runs(const std::vector<IterationRecord>& eki, const ObservationSet& eki_obs,
                           const std::vector<IterationRecord>& lm, const ObservationSet& lm_obs);

void write_comparison_csv(std::ostream& out, const RunComparison& cmp);

namespace serial {
Eigen::MatrixXd finite_difference_jacobian(const ForwardModel& model, const ReducedSpace& space,
                                           const Eigen::VectorXd& coeffs, double step);
}  // namespace serial

}  // namespace reki
