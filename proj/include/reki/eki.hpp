#pragma once

#include "reki/field.hpp"
#include "reki/forward_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace reki {

/// Data y, diagonal noise weighting Gamma and noise level eta = |Gamma^{-1/2} xi|.
struct ObservationSet {
  Eigen::VectorXd y;
  Eigen::VectorXd gamma_diag;
  double eta = 0.0;

  Eigen::Index size() const { return y.size(); }
  void validate() const;

  /// |Gamma^{-1/2} v|.
  double weighted_norm(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// |Gamma^{-1/2} (y - w)|.
  double misfit(const Eigen::Ref<const Eigen::VectorXd>& w) const;
};

/// N_e members stored as the columns of `members`; `outputs` caches G of each member.
class Ensemble {
 public:
  Ensemble(Discretization disc, Eigen::MatrixXd members);

  const Discretization& discretization() const { return disc_; }
  const Eigen::MatrixXd& members() const { return members_; }
  Eigen::Index size() const { return members_.cols(); }
  Eigen::Index dim() const { return members_.rows(); }

  Field member(Eigen::Index j) const;
  Eigen::VectorXd mean() const;

  bool has_outputs() const { return outputs_.has_value(); }
  const Eigen::MatrixXd& outputs() const;
  Eigen::VectorXd output_mean() const;
  void set_outputs(Eigen::MatrixXd outputs);
  void clear_outputs() { outputs_.reset(); }

 private:
  Discretization disc_;
  Eigen::MatrixXd members_;
  std::optional<Eigen::MatrixXd> outputs_;
};

/// Thrown by predict when a member's forward solve fails.
class ForwardEvaluationError : public std::runtime_error {
 public:
  ForwardEvaluationError(Eigen::Index member, const std::string& what);
  Eigen::Index member() const { return member_; }

 private:
  Eigen::Index member_;
};

struct EkiConfig {
  double rho = 0.7;
  double tau = 1.0 / 0.7 + 1e-3;
  double alpha0_init = 1.0;
  double alpha_floor = 1e-6;
  int max_iters = 100;
  int max_alpha_doublings = 60;

  EkiConfig() = default;
  EkiConfig(double rho, double tau);  // validates

  void validate() const;
};

/// Cross covariance C^{uw} (one column per observation), C^{ww} and the means.
/// `Dw` keeps the output deviations w^(j) - wbar, so C^{ww} = Dw Dw^T / (N_e - 1).
struct KalmanOperators {
  Eigen::MatrixXd Cuw;
  Eigen::MatrixXd Cww;
  Eigen::MatrixXd Dw;
  Eigen::VectorXd w_mean;
  Eigen::VectorXd u_mean;
};

struct AlphaSelection {
  double alpha = 0.0;
  int doublings = 0;
};

/// Fills the output cache with G(u^(j)). Members are evaluated concurrently.
void predict(Ensemble& ens, const ForwardModel& model);

bool check_discrepancy(const Eigen::VectorXd& w_mean, const ObservationSet& obs, const EkiConfig& cfg);

KalmanOperators build_operators(const Ensemble& ens);

/// First alpha = 2^N seed with alpha |Gamma^{1/2}(K + alpha Gamma)^{-1} r| >= rho |Gamma^{-1/2} r|.
AlphaSelection select_alpha(const Eigen::MatrixXd& K, const Eigen::VectorXd& residual, const Eigen::VectorXd& gamma_diag,
                            const EkiConfig& cfg, double alpha_seed);
AlphaSelection select_alpha(const KalmanOperators& ops, const ObservationSet& obs, const EkiConfig& cfg, double alpha_seed);

/// alpha |Gamma^{1/2}(K + alpha Gamma)^{-1} r|, the left side of the acceptance test.
double alpha_condition_lhs(const Eigen::MatrixXd& K, const Eigen::VectorXd& residual, const Eigen::VectorXd& gamma_diag,
                           double alpha);

/// |Gamma^{-1/2}(y - H zbar^a(alpha))|: the misfit the updated mean would have if G were linear.
/// Evaluated from the SVD of the whitened deviations, so it stays accurate as alpha -> 0.
double linearized_misfit(const KalmanOperators& ops, const ObservationSet& obs, double alpha);

/// u^(j) += C^{uw}(C^{ww} + alpha Gamma)^{-1}(y^(j) - w^(j)); `data` holds one column per member or a single column.
Ensemble analysis_update(const Ensemble& ens, const KalmanOperators& ops, const Eigen::VectorXd& gamma_diag,
                         const Eigen::MatrixXd& data, double alpha);
Ensemble analysis_update(const Ensemble& ens, const KalmanOperators& ops, const ObservationSet& obs, double alpha);

struct IterationRecord {
  int n = 0;
  double alpha = 0.0;  // NaN on the stopping iteration
  int doublings = 0;
  double misfit = 0.0;              // |Gamma^{-1/2}(y - wbar_n)|
  double mean_output_misfit = 0.0;  // |Gamma^{-1/2}(y - G(ubar_n))|, NaN when not logged
  double rel_error = 0.0;           // NaN without a truth
  long forward_evals = 0;           // ensemble evaluations only
  bool stopped = false;
  long jacobian_evals = 0;          // LM only
};

struct RunOptions {
  /// Error of the ensemble mean against the truth, when a truth is known.
  std::function<double(const Eigen::VectorXd&)> error;
  /// Also evaluate G at the ensemble mean each iteration (not counted in forward_evals).
  bool log_estimate_misfit = false;
};

struct RunResult {
  Field estimate;
  std::vector<IterationRecord> records;
  bool converged = false;
  Ensemble final_ensemble;
};

RunResult run(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs, const EkiConfig& cfg,
              const RunOptions& opts = {});

/// Fixed alpha = 1, no stopping; `iters` analysis steps, iters + 1 records.
RunResult run_unregularized(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs, int iters,
                            const RunOptions& opts = {});

/// One alpha = 1 update against perturbed data y + N(0, Gamma). Cached outputs of `initial` are reused.
Ensemble ensemble_smoother(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs,
                           std::uint64_t seed);

void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records, bool with_jacobian = false);

namespace serial {
void predict(Ensemble& ens, const ForwardModel& model);
KalmanOperators build_operators(const Ensemble& ens);
Ensemble analysis_update(const Ensemble& ens, const KalmanOperators& ops, const Eigen::VectorXd& gamma_diag,
                         const Eigen::MatrixXd& data, double alpha);
}  // namespace serial

}  // namespace reki
