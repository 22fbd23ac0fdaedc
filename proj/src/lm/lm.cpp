#include "reki/lm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <string>

namespace reki {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd diag_solve(const Eigen::VectorXd& d, const Eigen::MatrixXd& B) { return d.cwiseInverse().asDiagonal() * B; }

}  // namespace

ReducedSpace ReducedSpace::from_ensemble(const Ensemble& ens) {
  ReducedSpace s;
  s.disc = ens.discretization();
  s.origin = ens.mean();
  s.basis = ens.members().colwise() - s.origin;
  s.prior_cov = Eigen::MatrixXd::Identity(ens.size(), ens.size()) / double(ens.size() - 1);
  return s;
}

Eigen::VectorXd ReducedSpace::lift(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != dim()) throw std::invalid_argument("ReducedSpace: coefficient length mismatch");
  return origin + basis * coeffs;
}

void ReducedSpace::validate() const {
  if (origin.size() != discretization_size(disc) || basis.rows() != origin.size()) {
    throw std::invalid_argument("ReducedSpace: basis does not match the discretization");
  }
  if (basis.cols() < 1) throw std::invalid_argument("ReducedSpace: empty basis");
  if (prior_cov.rows() != basis.cols() || prior_cov.cols() != basis.cols()) {
    throw std::invalid_argument("ReducedSpace: prior covariance has the wrong size");
  }
  if (!(prior_cov - prior_cov.transpose()).isZero(1e-12 * std::max(1.0, prior_cov.norm())) ||
      Eigen::LLT<Eigen::MatrixXd>(prior_cov).info() != Eigen::Success) {
    throw std::invalid_argument("ReducedSpace: prior covariance must be symmetric positive definite");
  }
}

namespace {

template <bool Parallel>
Eigen::MatrixXd fd_jacobian(const ForwardModel& model, const ReducedSpace& space, const Eigen::VectorXd& coeffs,
                            double step) {
  if (!(step > 0)) throw std::invalid_argument("finite_difference_jacobian: step must be positive");
  space.validate();
  const Eigen::Index K = space.dim();
  const Eigen::Index M = model.output_size();
  const Eigen::VectorXd u = space.lift(coeffs);
  // Column 2k holds G(u + h_k phi_k), column 2k + 1 holds G(u - h_k phi_k).
  Eigen::MatrixXd evals(M, 2 * K);
  std::vector<std::string> errors(static_cast<std::size_t>(2 * K));
#pragma omp parallel for schedule(dynamic) if (Parallel)
  for (Eigen::Index e = 0; e < 2 * K; ++e) {
    const Eigen::Index k = e / 2;
    const double h = step * std::sqrt(space.prior_cov(k, k));
    const double sign = (e % 2 == 0) ? 1.0 : -1.0;
    try {
      evals.col(e) = model.evaluate(u + sign * h * space.basis.col(k));
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(e)] = ex.what();
      if (errors[static_cast<std::size_t>(e)].empty()) errors[static_cast<std::size_t>(e)] = "unknown failure";
    }
  }
  for (std::size_t e = 0; e < errors.size(); ++e) {
    if (!errors[e].empty()) throw std::runtime_error("Jacobian column " + std::to_string(e / 2) + ": " + errors[e]);
  }
  Eigen::MatrixXd J(M, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double h = step * std::sqrt(space.prior_cov(k, k));
    J.col(k) = (evals.col(2 * k) - evals.col(2 * k + 1)) / (2.0 * h);
  }
  if (!J.allFinite()) throw std::runtime_error("finite_difference_jacobian: non-finite entries");
  return J;
}

}  // namespace

Eigen::MatrixXd finite_difference_jacobian(const ForwardModel& model, const ReducedSpace& space,
                                           const Eigen::VectorXd& coeffs, double step) {
  return fd_jacobian<true>(model, space, coeffs, step);
}

Eigen::MatrixXd serial::finite_difference_jacobian(const ForwardModel& model, const ReducedSpace& space,
                                                   const Eigen::VectorXd& coeffs, double step) {
  return fd_jacobian<false>(model, space, coeffs, step);
}

Eigen::VectorXd lm_increment(const Eigen::MatrixXd& J, const Eigen::MatrixXd& C, const Eigen::VectorXd& gamma_diag,
                             const Eigen::VectorXd& r, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("lm_increment: alpha must be positive");
  const Eigen::MatrixXd CJt = C * J.transpose();
  Eigen::MatrixXd S = J * CJt;
  S = 0.5 * (S + S.transpose()).eval();
  S.diagonal() += alpha * gamma_diag;
  return CJt * S.llt().solve(r);
}

Eigen::VectorXd lm_increment_normal(const Eigen::MatrixXd& J, const Eigen::MatrixXd& C, const Eigen::VectorXd& gamma_diag,
                                    const Eigen::VectorXd& r, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("lm_increment_normal: alpha must be positive");
  const Eigen::MatrixXd GiJ = diag_solve(gamma_diag, J);
  Eigen::MatrixXd A = J.transpose() * GiJ + alpha * C.llt().solve(Eigen::MatrixXd::Identity(C.rows(), C.cols()));
  A = 0.5 * (A + A.transpose()).eval();
  return A.ldlt().solve(GiJ.transpose() * r);
}

LmStep lm_step(const ReducedSpace& space, const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& J,
               const Eigen::VectorXd& residual, const ObservationSet& obs, const EkiConfig& cfg, double alpha_seed) {
  if (J.cols() != space.dim() || J.rows() != obs.size()) throw std::invalid_argument("lm_step: Jacobian has the wrong shape");
  Eigen::MatrixXd K = J * space.prior_cov * J.transpose();
  K = 0.5 * (K + K.transpose()).eval();
  LmStep step;
  step.alpha = select_alpha(K, residual, obs.gamma_diag, cfg, alpha_seed);
  step.coeffs = coeffs + lm_increment(J, space.prior_cov, obs.gamma_diag, residual, step.alpha.alpha);
  return step;
}

LmResult run_lm(const ReducedSpace& space, const ForwardModel& model, const ObservationSet& obs, const LmConfig& cfg,
                const RunOptions& opts) {
  cfg.eki.validate();
  obs.validate();
  space.validate();
  if (model.output_size() != obs.size() || model.input_size() != space.origin.size()) {
    throw std::invalid_argument("run_lm: model does not match the data or the reduced space");
  }
  const long K = static_cast<long>(space.dim());
  std::vector<IterationRecord> records;
  bool converged = false;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(space.dim());
  double seed = cfg.eki.alpha0_init;
  long evals = 0;
  long jacobians = 0;
  for (int n = 0;; ++n) {
    const Eigen::VectorXd u = space.lift(a);
    const Eigen::VectorXd r = obs.y - model.evaluate(u);
    ++evals;
    IterationRecord rec;
    rec.n = n;
    rec.alpha = kNaN;
    rec.misfit = obs.weighted_norm(r);
    rec.mean_output_misfit = rec.misfit;
    rec.rel_error = opts.error ? opts.error(u) : kNaN;
    if (rec.misfit <= cfg.eki.tau * obs.eta) {
      rec.forward_evals = evals;
      rec.jacobian_evals = jacobians;
      rec.stopped = true;
      records.push_back(rec);
      converged = true;
      break;
    }
    if (n == cfg.eki.max_iters) {
      rec.forward_evals = evals;
      rec.jacobian_evals = jacobians;
      records.push_back(rec);
      break;
    }
    const Eigen::MatrixXd J = finite_difference_jacobian(model, space, a, cfg.fd_step);
    evals += 2 * K;
    ++jacobians;
    const LmStep step = lm_step(space, a, J, r, obs, cfg.eki, seed);
    rec.alpha = step.alpha.alpha;
    rec.doublings = step.alpha.doublings;
    rec.forward_evals = evals;
    rec.jacobian_evals = jacobians;
    records.push_back(rec);
    a = step.coeffs;
    seed = std::max(step.alpha.alpha / 2.0, cfg.eki.alpha_floor);
  }
  return {Field(space.disc, space.lift(a)), a, std::move(records), converged};
}

double RunComparison::terminal_misfit_ratio() const {
  const double a = eki_final.misfit;
  const double b = lm_final.misfit;
  return std::max(a, b) / std::min(a, b);
}

RunComparison compare_runs(const std::vector<IterationRecord>& eki, const ObservationSet& eki_obs,
                           const std::vector<IterationRecord>& lm, const ObservationSet& lm_obs) {
  if (eki.empty() || lm.empty()) throw std::invalid_argument("compare_runs: empty record list");
  if (eki_obs.y != lm_obs.y || eki_obs.gamma_diag != lm_obs.gamma_diag || eki_obs.eta != lm_obs.eta) {
    throw std::invalid_argument("compare_runs: the runs used different observation sets");
  }
  RunComparison cmp;
  const std::size_t len = std::max(eki.size(), lm.size());
  for (std::size_t i = 0; i < len; ++i) {
    ComparisonRow row;
    row.n = static_cast<int>(i);
    row.eki_misfit = i < eki.size() ? eki[i].misfit : kNaN;
    row.eki_error = i < eki.size() ? eki[i].rel_error : kNaN;
    row.lm_misfit = i < lm.size() ? lm[i].misfit : kNaN;
    row.lm_error = i < lm.size() ? lm[i].rel_error : kNaN;
    cmp.rows.push_back(row);
  }
  cmp.eki_final = eki.back();
  cmp.lm_final = lm.back();
  return cmp;
}

void write_comparison_csv(std::ostream& out, const RunComparison& cmp) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "n,eki_misfit,lm_misfit,eki_error,lm_error\n";
  for (const auto& r : cmp.rows) {
    out << r.n << ',' << num(r.eki_misfit) << ',' << num(r.lm_misfit) << ',' << num(r.eki_error) << ',' << num(r.lm_error)
        << '\n';
  }
}

}  // namespace reki
