#include "reki/eki.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace reki {

void ObservationSet::validate() const {
  if (y.size() < 1) throw std::invalid_argument("ObservationSet: no data");
  if (gamma_diag.size() != y.size()) throw std::invalid_argument("ObservationSet: Gamma and y differ in length");
  if (!y.allFinite()) throw std::invalid_argument("ObservationSet: non-finite data");
  if (!(gamma_diag.array() > 0).all() || !gamma_diag.allFinite()) {
    throw std::invalid_argument("ObservationSet: Gamma entries must be positive");
  }
  if (!(eta >= 0) || !std::isfinite(eta)) throw std::invalid_argument("ObservationSet: eta must be non-negative");
}

double ObservationSet::weighted_norm(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != y.size()) throw std::invalid_argument("ObservationSet: length mismatch");
  return std::sqrt((v.array().square() / gamma_diag.array()).sum());
}

double ObservationSet::misfit(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (w.size() != y.size()) throw std::invalid_argument("ObservationSet: length mismatch");
  return weighted_norm(y - w);
}

Ensemble::Ensemble(Discretization disc, Eigen::MatrixXd members) : disc_(std::move(disc)), members_(std::move(members)) {
  if (members_.cols() < 2) throw std::invalid_argument("Ensemble: need at least two members");
  if (members_.rows() != discretization_size(disc_)) {
    throw std::invalid_argument("Ensemble: member length does not match the discretization");
  }
  if (!members_.allFinite()) throw std::invalid_argument("Ensemble: non-finite member values");
}

Field Ensemble::member(Eigen::Index j) const { return Field(disc_, members_.col(j)); }

Eigen::VectorXd Ensemble::mean() const { return members_.rowwise().mean(); }

const Eigen::MatrixXd& Ensemble::outputs() const {
  if (!outputs_) throw std::logic_error("Ensemble: outputs not computed");
  return *outputs_;
}

Eigen::VectorXd Ensemble::output_mean() const { return outputs().rowwise().mean(); }

void Ensemble::set_outputs(Eigen::MatrixXd outputs) {
  if (outputs.cols() != size()) throw std::invalid_argument("Ensemble: one output per member required");
  outputs_ = std::move(outputs);
}

ForwardEvaluationError::ForwardEvaluationError(Eigen::Index member, const std::string& what)
    : std::runtime_error("forward evaluation failed for member " + std::to_string(member) + ": " + what), member_(member) {}

namespace {

void check_model(const Ensemble& ens, const ForwardModel& model) {
  if (model.input_size() != ens.dim()) throw std::invalid_argument("predict: model does not accept the ensemble's discretization");
}

Eigen::VectorXd evaluate_member(const Ensemble& ens, const ForwardModel& model, Eigen::Index j) {
  Eigen::VectorXd w = model.evaluate(ens.members().col(j));
  if (w.size() != model.output_size()) throw std::runtime_error("model returned the wrong number of outputs");
  if (!w.allFinite()) throw std::runtime_error("model returned non-finite outputs");
  return w;
}

}  // namespace

void predict(Ensemble& ens, const ForwardModel& model) {
  check_model(ens, model);
  const Eigen::Index ne = ens.size();
  Eigen::MatrixXd W(model.output_size(), ne);
  // Failures are collected per member and the lowest index is reported.
  std::vector<std::string> errors(static_cast<std::size_t>(ne));
  std::vector<char> failed(static_cast<std::size_t>(ne), 0);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index j = 0; j < ne; ++j) {
    try {
      W.col(j) = evaluate_member(ens, model, j);
    } catch (const std::exception& e) {
      failed[static_cast<std::size_t>(j)] = 1;
      errors[static_cast<std::size_t>(j)] = e.what();
    }
  }
  for (Eigen::Index j = 0; j < ne; ++j) {
    if (failed[static_cast<std::size_t>(j)]) throw ForwardEvaluationError(j, errors[static_cast<std::size_t>(j)]);
  }
  ens.set_outputs(std::move(W));
}

void serial::predict(Ensemble& ens, const ForwardModel& model) {
  check_model(ens, model);
  Eigen::MatrixXd W(model.output_size(), ens.size());
  for (Eigen::Index j = 0; j < ens.size(); ++j) {
    try {
      W.col(j) = evaluate_member(ens, model, j);
    } catch (const std::exception& e) {
      throw ForwardEvaluationError(j, e.what());
    }
  }
  ens.set_outputs(std::move(W));
}

}  // namespace reki
