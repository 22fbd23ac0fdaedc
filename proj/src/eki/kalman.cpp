#include "reki/eki.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace reki {

EkiConfig::EkiConfig(double rho_, double tau_) : rho(rho_), tau(tau_) { validate(); }

void EkiConfig::validate() const {
  if (!(rho > 0 && rho < 1)) throw std::invalid_argument("EkiConfig: rho must lie in (0, 1)");
  if (!(tau * rho > 1)) throw std::invalid_argument("EkiConfig: tau must exceed 1/rho");
  if (!(alpha0_init > 0) || !std::isfinite(alpha0_init)) throw std::invalid_argument("EkiConfig: alpha0_init must be positive");
  if (!(alpha_floor > 0)) throw std::invalid_argument("EkiConfig: alpha_floor must be positive");
  if (max_iters < 1) throw std::invalid_argument("EkiConfig: max_iters must be positive");
  if (max_alpha_doublings < 1) throw std::invalid_argument("EkiConfig: max_alpha_doublings must be positive");
}

bool check_discrepancy(const Eigen::VectorXd& w_mean, const ObservationSet& obs, const EkiConfig& cfg) {
  return obs.misfit(w_mean) <= cfg.tau * obs.eta;
}

namespace {

void require_outputs(const Ensemble& ens) {
  if (!ens.has_outputs()) throw std::logic_error("build_operators: ensemble outputs not computed");
}

// (K + alpha Gamma), factorized once per trial alpha.
Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& K, const Eigen::VectorXd& gamma_diag, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  Eigen::MatrixXd A = K;
  A.diagonal() += alpha * gamma_diag;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("factorization of (C^ww + alpha Gamma) failed");
  return llt;
}

void check_shapes(const Eigen::MatrixXd& K, const Eigen::VectorXd& r, const Eigen::VectorXd& gamma_diag) {
  if (K.rows() != K.cols() || K.rows() != r.size() || gamma_diag.size() != r.size()) {
    throw std::invalid_argument("select_alpha: inconsistent dimensions");
  }
}

}  // namespace

KalmanOperators build_operators(const Ensemble& ens) {
  require_outputs(ens);
  const double s = 1.0 / static_cast<double>(ens.size() - 1);
  KalmanOperators ops;
  ops.u_mean = ens.mean();
  ops.w_mean = ens.output_mean();
  const Eigen::MatrixXd Du = ens.members().colwise() - ops.u_mean;
  ops.Dw = ens.outputs().colwise() - ops.w_mean;
  ops.Cww = s * (ops.Dw * ops.Dw.transpose());
  ops.Cww = 0.5 * (ops.Cww + ops.Cww.transpose()).eval();
  ops.Cuw = s * (Du * ops.Dw.transpose());
  return ops;
}

KalmanOperators serial::build_operators(const Ensemble& ens) {
  require_outputs(ens);
  const Eigen::Index ne = ens.size();
  const Eigen::Index n = ens.dim();
  const Eigen::Index m = ens.outputs().rows();
  const auto& U = ens.members();
  const auto& W = ens.outputs();
  KalmanOperators ops;
  ops.u_mean = Eigen::VectorXd::Zero(n);
  ops.w_mean = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < ne; ++j) {
    ops.u_mean += U.col(j);
    ops.w_mean += W.col(j);
  }
  ops.u_mean /= double(ne);
  ops.w_mean /= double(ne);
  ops.Cww = Eigen::MatrixXd::Zero(m, m);
  ops.Cuw = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index j = 0; j < ne; ++j) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const double dwb = W(b, j) - ops.w_mean[b];
      for (Eigen::Index a = 0; a < m; ++a) ops.Cww(a, b) += (W(a, j) - ops.w_mean[a]) * dwb;
      for (Eigen::Index i = 0; i < n; ++i) ops.Cuw(i, b) += (U(i, j) - ops.u_mean[i]) * dwb;
    }
  }
  ops.Cww /= double(ne - 1);
  ops.Cuw /= double(ne - 1);
  ops.Dw = W.colwise() - ops.w_mean;
  return ops;
}

double alpha_condition_lhs(const Eigen::MatrixXd& K, const Eigen::VectorXd& residual, const Eigen::VectorXd& gamma_diag,
                           double alpha) {
  check_shapes(K, residual, gamma_diag);
  const Eigen::VectorXd x = factor(K, gamma_diag, alpha).solve(residual);
  return alpha * (x.array() * gamma_diag.array().sqrt()).matrix().norm();
}

AlphaSelection select_alpha(const Eigen::MatrixXd& K, const Eigen::VectorXd& residual, const Eigen::VectorXd& gamma_diag,
                            const EkiConfig& cfg, double alpha_seed) {
  check_shapes(K, residual, gamma_diag);
  if (!(alpha_seed > 0)) throw std::invalid_argument("select_alpha: seed must be positive");
  const double target = cfg.rho * std::sqrt((residual.array().square() / gamma_diag.array()).sum());
  double alpha = alpha_seed;
  for (int N = 0; N <= cfg.max_alpha_doublings; ++N) {
    if (alpha_condition_lhs(K, residual, gamma_diag, alpha) >= target) return {alpha, N};
    alpha *= 2.0;
  }
  throw std::runtime_error("select_alpha: no admissible alpha within " + std::to_string(cfg.max_alpha_doublings) +
                           " doublings of " + std::to_string(alpha_seed));
}

AlphaSelection select_alpha(const KalmanOperators& ops, const ObservationSet& obs, const EkiConfig& cfg, double alpha_seed) {
  return select_alpha(ops.Cww, obs.y - ops.w_mean, obs.gamma_diag, cfg, alpha_seed);
}

double linearized_misfit(const KalmanOperators& ops, const ObservationSet& obs, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (ops.Dw.rows() != obs.size()) throw std::invalid_argument("linearized_misfit: operators do not match the data");
  // With S = Gamma^{-1/2} Dw / sqrt(N_e - 1) = U Sigma V^T the whitened residual after the
  // update is r - U diag(s^2 / (s^2 + alpha)) U^T r.
  const Eigen::VectorXd isd = obs.gamma_diag.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = isd.asDiagonal() * ops.Dw / std::sqrt(double(ops.Dw.cols() - 1));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
  const Eigen::VectorXd r = isd.cwiseProduct(obs.y - ops.w_mean);
  const Eigen::VectorXd c = svd.matrixU().transpose() * r;
  const Eigen::ArrayXd s2 = svd.singularValues().array().square();
  const Eigen::VectorXd kept = (s2 / (s2 + alpha)).matrix().cwiseProduct(c);
  return (r - svd.matrixU() * kept).norm();
}

namespace {

Eigen::MatrixXd innovations(const Ensemble& ens, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd& W = ens.outputs();
  if (data.rows() != W.rows()) throw std::invalid_argument("analysis_update: data length mismatch");
  if (data.cols() == 1) return (-W).colwise() + data.col(0);
  if (data.cols() != W.cols()) throw std::invalid_argument("analysis_update: need one data column per member");
  return data - W;
}

}  // namespace

Ensemble analysis_update(const Ensemble& ens, const KalmanOperators& ops, const Eigen::VectorXd& gamma_diag,
                         const Eigen::MatrixXd& data, double alpha) {
  const Eigen::MatrixXd X = factor(ops.Cww, gamma_diag, alpha).solve(innovations(ens, data));
  return Ensemble(ens.discretization(), ens.members() + ops.Cuw * X);
}

Ensemble analysis_update(const Ensemble& ens, const KalmanOperators& ops, const ObservationSet& obs, double alpha) {
  return analysis_update(ens, ops, obs.gamma_diag, obs.y, alpha);
}

Ensemble serial::analysis_update(const Ensemble& ens, const KalmanOperators& ops, const Eigen::VectorXd& gamma_diag,
                                 const Eigen::MatrixXd& data, double alpha) {
  const auto llt = factor(ops.Cww, gamma_diag, alpha);
  const Eigen::MatrixXd D = innovations(ens, data);
  Eigen::MatrixXd U = ens.members();
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const Eigen::VectorXd x = llt.solve(D.col(j));
    for (Eigen::Index m = 0; m < x.size(); ++m) {
      for (Eigen::Index i = 0; i < U.rows(); ++i) U(i, j) += ops.Cuw(i, m) * x[m];
    }
  }
  return Ensemble(ens.discretization(), std::move(U));
}

}  // namespace reki
