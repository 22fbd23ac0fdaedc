#pragma once

#include <Eigen/Core>

#include <atomic>
#include <functional>
#include <memory>

namespace reki {

/// Parameter-to-observation map u -> G(u) in R^M.
/// Implementations must be pure and safe to call concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::Index input_size() const = 0;
  virtual Eigen::Index output_size() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const = 0;
};

/// G(u) = A u + b.
class LinearModel final : public ForwardModel {
 public:
  explicit LinearModel(Eigen::MatrixXd A, Eigen::VectorXd b = {});

  Eigen::Index input_size() const override { return A_.cols(); }
  Eigen::Index output_size() const override { return A_.rows(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;

  const Eigen::MatrixXd& matrix() const { return A_; }
  const Eigen::VectorXd& offset() const { return b_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

/// Applies a pointwise parameter transform before an inner model.
class MappedModel final : public ForwardModel {
 public:
  using Transform = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  MappedModel(std::shared_ptr<const ForwardModel> inner, Transform transform);

  Eigen::Index input_size() const override { return inner_->input_size(); }
  Eigen::Index output_size() const override { return inner_->output_size(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;

 private:
  std::shared_ptr<const ForwardModel> inner_;
  Transform transform_;
};

/// Counts evaluations of a wrapped model (thread-safe).
class CountingModel final : public ForwardModel {
 public:
  explicit CountingModel(std::shared_ptr<const ForwardModel> inner) : inner_(std::move(inner)) {}

  Eigen::Index input_size() const override { return inner_->input_size(); }
  Eigen::Index output_size() const override { return inner_->output_size(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;

  long count() const { return count_.load(); }
  void reset() { count_ = 0; }

 private:
  std::shared_ptr<const ForwardModel> inner_;
  mutable std::atomic<long> count_{0};
};

}  // namespace reki
