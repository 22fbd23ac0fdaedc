#include "reki/field.hpp"

#include <cmath>
#include <stdexcept>

namespace reki {

Eigen::Index discretization_size(const Discretization& disc) {
  if (const auto* g = std::get_if<Grid>(&disc)) return g->size();
  const auto& mesh = std::get<MeshHandle>(disc);
  if (!mesh) throw std::invalid_argument("discretization: null mesh handle");
  return mesh->element_count();
}

Eigen::VectorXd quadrature_weights(const Discretization& disc) {
  if (const auto* g = std::get_if<Grid>(&disc)) return Eigen::VectorXd::Constant(g->size(), g->cell_area());
  return std::get<MeshHandle>(disc)->areas();
}

Eigen::MatrixX2d sample_points(const Discretization& disc) {
  if (const auto* g = std::get_if<Grid>(&disc)) return cell_centers(*g);
  return std::get<MeshHandle>(disc)->centroids();
}

bool same_discretization(const Discretization& a, const Discretization& b) {
  if (a.index() != b.index()) return false;
  if (const auto* g = std::get_if<Grid>(&a)) return *g == std::get<Grid>(b);
  return std::get<MeshHandle>(a) == std::get<MeshHandle>(b);
}

Field::Field(Discretization disc, Eigen::VectorXd values) : disc_(std::move(disc)), values_(std::move(values)) {
  if (values_.size() != discretization_size(disc_)) throw std::invalid_argument("Field: value count does not match discretization");
  if (!values_.allFinite()) throw std::invalid_argument("Field: non-finite value");
}

Field Field::constant(const Discretization& disc, double value) {
  return Field(disc, Eigen::VectorXd::Constant(discretization_size(disc), value));
}

const Grid& Field::grid() const {
  if (const auto* g = std::get_if<Grid>(&disc_)) return *g;
  throw std::logic_error("Field: not defined on a structured grid");
}

double l2_norm(const Discretization& disc, const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::VectorXd w = quadrature_weights(disc);
  if (values.size() != w.size()) throw std::invalid_argument("l2_norm: size mismatch");
  return std::sqrt((w.array() * values.array().square()).sum());
}

double relative_l2_error(const Discretization& disc,
                         const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double denom = l2_norm(disc, b);
  if (denom == 0.0) throw std::invalid_argument("relative_l2_error: reference field is zero");
  return l2_norm(disc, a - b) / denom;
}

}  // namespace reki
