#include "reki/forward_model.hpp"

#include <stdexcept>

namespace reki {

LinearModel::LinearModel(Eigen::MatrixXd A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
  if (b_.size() == 0) b_ = Eigen::VectorXd::Zero(A_.rows());
  if (b_.size() != A_.rows()) throw std::invalid_argument("LinearModel: offset length mismatch");
}

Eigen::VectorXd LinearModel::evaluate(const Eigen::VectorXd& u) const {
  if (u.size() != A_.cols()) throw std::invalid_argument("LinearModel: input length mismatch");
  return A_ * u + b_;
}

MappedModel::MappedModel(std::shared_ptr<const ForwardModel> inner, Transform transform)
    : inner_(std::move(inner)), transform_(std::move(transform)) {
  if (!inner_) throw std::invalid_argument("MappedModel: null inner model");
}

Eigen::VectorXd MappedModel::evaluate(const Eigen::VectorXd& u) const { return inner_->evaluate(transform_(u)); }

Eigen::VectorXd CountingModel::evaluate(const Eigen::VectorXd& u) const {
  ++count_;
  return inner_->evaluate(u);
}

}  // namespace reki
