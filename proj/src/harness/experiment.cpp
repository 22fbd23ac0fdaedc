#include "reki/harness.hpp"
#include "reki/rng.hpp"

#include <cmath>
#include <limits>

namespace reki {

namespace {

constexpr double kDarcyLo = 0.0;
constexpr double kDarcyHi = 6.0;

MeshHandle disk_mesh(int target) {
  return std::make_shared<const TriMesh>(make_disk_mesh(disk_mesh_for_target(target)));
}

Grid kl_grid_of(const ExperimentConfig& cfg) {
  return is_eit(cfg.model) ? Grid::square(cfg.kl_grid, -1.0, 1.0) : Grid::square(cfg.kl_grid, kDarcyLo, kDarcyHi);
}

// Transfers KL-grid columns to the inversion discretization.
Eigen::MatrixXd to_inversion(const Grid& kl, const Discretization& inv, Eigen::MatrixXd cols) {
  if (same_discretization(kl, inv)) return cols;
  Eigen::MatrixXd out(discretization_size(inv), cols.cols());
  for (Eigen::Index j = 0; j < cols.cols(); ++j) out.col(j) = project(Field(kl, cols.col(j)), inv).values();
  return out;
}

}  // namespace

Experiment Experiment::build(const ExperimentConfig& cfg) {
  cfg.validate();
  Experiment e;
  e.cfg = cfg;
  std::shared_ptr<const ForwardModel> inner;
  if (is_eit(cfg.model)) {
    const MeshHandle tm = disk_mesh(cfg.eit_truth_elements);
    const MeshHandle im = disk_mesh(cfg.eit_inversion_elements);
    if (tm->element_count() <= im->element_count()) {
      throw std::invalid_argument("truth mesh is not finer than the inversion mesh after meshing");
    }
    e.truth_disc = tm;
    e.inversion_disc = im;
    e.truth_model = std::make_shared<CemModel>(CemSetup::adjacent(tm, cfg.contact_impedance));
    inner = std::make_shared<CemModel>(CemSetup::adjacent(im, cfg.contact_impedance));
  } else {
    const MeasurementLayout layout = MeasurementLayout::lattice(cfg.lattice, kDarcyLo, kDarcyHi);
    e.truth_disc = Grid::square(cfg.truth_grid, kDarcyLo, kDarcyHi);
    e.inversion_disc = Grid::square(cfg.inversion_grid, kDarcyLo, kDarcyHi);
    e.truth_model = std::make_shared<DarcyModel>(DarcyProblem::standard(cfg.truth_grid), layout);
    inner = std::make_shared<DarcyModel>(DarcyProblem::standard(cfg.inversion_grid), layout);
  }
  e.model = is_level_set(cfg.model) ? make_level_set_model(inner, cfg.conductivity) : inner;

  const Grid kl = kl_grid_of(cfg);
  e.prior = kl_basis(cfg.prior_spec, kl, cfg.prior_truncation);

  if (cfg.truth_kind == TruthKind::Grf) {
    const bool same = cfg.truth_spec.family == cfg.prior_spec.family && cfg.truth_spec.c0 == cfg.prior_spec.c0 &&
                      cfg.truth_spec.a == cfg.prior_spec.a && cfg.truth_spec.L == cfg.prior_spec.L &&
                      cfg.truth_spec.theta == cfg.prior_spec.theta && cfg.truth_spec.omega == cfg.prior_spec.omega &&
                      !cfg.prior_truncation.count && cfg.prior_truncation.trace_fraction == Truncation{}.trace_fraction;
    const KLBasis basis = same ? e.prior : kl_basis(cfg.truth_spec, kl);
    const Eigen::VectorXd xi =
        kl_coefficients(rng::derive(cfg.truth_seed, rng::domain::kTruth), 0, basis.eigenvalues.size());
    e.truth = Field(e.truth_disc, synthesize_at(basis, xi, sample_points(e.truth_disc)));
    if (is_eit(cfg.model)) {
      e.truth_reference = synthesize_at(basis, xi, sample_points(e.inversion_disc));
    } else {
      e.truth_reference = project(e.truth, e.inversion_disc).values();
    }
  } else {
    e.truth = shapes_to_log_conductivity(cfg.truth_shapes, e.truth_disc, cfg.conductivity);
    if (is_eit(cfg.model)) {
      e.truth_reference = shapes_to_log_conductivity(cfg.truth_shapes, e.inversion_disc, cfg.conductivity).values();
    } else {
      e.truth_reference = project(e.truth, e.inversion_disc).values();
    }
  }

  if (is_level_set(cfg.model)) {
    if (is_eit(cfg.model)) {
      // Element classification by centroid.
      const Eigen::VectorXd lk = e.truth_reference;
      e.truth_reference = lk.array().exp();
      const double li = std::log(cfg.conductivity.kappa_inside);
      e.truth_inside = Field(e.inversion_disc, (lk.array() == li).cast<double>().matrix());
    } else {
      const Field kappa(e.truth_disc, e.truth.values().array().exp().matrix());
      e.truth_reference = project(kappa, e.inversion_disc).values();
      e.truth_inside = inside_fraction(cfg.truth_shapes, std::get<Grid>(e.inversion_disc));
    }
  }
  return e;
}

Ensemble Experiment::initial_ensemble(std::uint64_t seed) const {
  const Eigen::MatrixXd U = sample_matrix(prior, rng::derive(seed, rng::domain::kEnsemble), cfg.ne);
  return Ensemble(inversion_disc, to_inversion(prior.grid, inversion_disc, U));
}

double Experiment::error(const Eigen::VectorXd& estimate) const {
  if (is_level_set(cfg.model)) {
    const Eigen::VectorXd kappa = to_log_conductivity(estimate, cfg.conductivity).array().exp();
    return relative_l2_error(inversion_disc, kappa, truth_reference);
  }
  return relative_l2_error(inversion_disc, estimate, truth_reference);
}

RunOptions Experiment::run_options() const {
  RunOptions o;
  o.error = [this](const Eigen::VectorXd& u) { return error(u); };
  o.log_estimate_misfit = cfg.log_estimate_misfit;
  return o;
}

std::optional<double> Experiment::misclassified(const Eigen::VectorXd& estimate) const {
  if (!truth_inside) return std::nullopt;
  return misclassified_fraction(Field(inversion_disc, estimate), *truth_inside);
}

SyntheticData generate_data(const Experiment& exp) {
  const ExperimentConfig& cfg = exp.cfg;
  SyntheticData d;
  d.noise_seed = cfg.noise_seed;
  d.clean = exp.truth_model->evaluate(exp.truth.values());
  const Eigen::Index m = d.clean.size();
  const double floor = cfg.gamma_floor * d.clean.cwiseAbs().maxCoeff();
  const Eigen::ArrayXd size = d.clean.cwiseAbs().array().max(floor);
  const std::uint64_t key = rng::derive(cfg.noise_seed, rng::domain::kNoise);
  Eigen::ArrayXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = rng::normal(key, 0, std::uint64_t(i));
  // Zero-noise runs still need a weighting; it is built as for 1%.
  const double p = (cfg.noise_percent > 0 ? cfg.noise_percent : 1.0) / 100.0;
  Eigen::ArrayXd gamma;
  Eigen::ArrayXd xi;
  if (cfg.noise_convention == NoiseConvention::GlobalPercent) {
    // Gamma proportional to |G|, scaled so that E|xi|^2 = (p |G|)^2; the draw is then
    // rescaled to exactly p |G|.
    const double target = p * d.clean.norm();
    gamma = size * (target * target / size.sum());
    xi = gamma.sqrt() * z;
    xi *= target / xi.matrix().norm();
  } else {
    gamma = (p * size).square();
    xi = gamma.sqrt() * z;
  }
  if (cfg.noise_percent == 0) xi.setZero();
  d.noise = xi.matrix();
  d.obs.y = d.clean + d.noise;
  d.obs.gamma_diag = gamma.matrix();
  d.obs.eta = d.obs.weighted_norm(d.noise);
  d.obs.validate();
  return d;
}

SyntheticData generate_data(const ExperimentConfig& cfg) { return generate_data(Experiment::build(cfg)); }

namespace {

ReducedSpace kl_space(const Experiment& exp) {
  const Eigen::Index k = std::min<Eigen::Index>(exp.cfg.lm_modes, exp.prior.eigenvalues.size());
  ReducedSpace s;
  s.disc = exp.inversion_disc;
  s.origin = Eigen::VectorXd::Zero(discretization_size(exp.inversion_disc));
  s.basis = to_inversion(exp.prior.grid, exp.inversion_disc, exp.prior.sample_scale * exp.prior.eigenvectors.leftCols(k));
  s.prior_cov = exp.prior.eigenvalues.head(k).asDiagonal();
  return s;
}

IterationRecord smoother_record(int n, const Ensemble& ens, const Experiment& exp, const ObservationSet& obs, long evals) {
  IterationRecord r;
  r.n = n;
  r.alpha = n == 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  r.misfit = obs.misfit(ens.output_mean());
  r.mean_output_misfit = exp.cfg.log_estimate_misfit ? obs.misfit(exp.model->evaluate(ens.mean()))
                                                     : std::numeric_limits<double>::quiet_NaN();
  r.rel_error = exp.error(ens.mean());
  r.forward_evals = evals;
  return r;
}

}  // namespace

namespace {

std::size_t argmin_error(const std::vector<IterationRecord>& records) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].rel_error < records[best].rel_error) best = i;
  }
  return best;
}

}  // namespace

bool RunOutcome::semiconvergence() const {
  return records.size() >= 2 && argmin_error(records) + 1 < records.size();
}

bool RunOutcome::interior_minimum() const {
  const std::size_t best = argmin_error(records);
  return records.size() >= 3 && best > 0 && best + 1 < records.size();
}

RunOutcome run_single(const Experiment& exp, const SyntheticData& data, std::uint64_t seed) {
  RunOutcome out;
  out.seed = seed;
  try {
    const Ensemble e0 = exp.initial_ensemble(seed);
    const RunOptions opts = exp.run_options();
    const ExperimentConfig& cfg = exp.cfg;
    switch (cfg.mode) {
      case RunMode::Regularized: {
        RunResult r = run(e0, *exp.model, data.obs, cfg.eki, opts);
        out.records = std::move(r.records);
        out.estimate = std::move(r.estimate);
        out.converged = r.converged;
        break;
      }
      case RunMode::Unregularized: {
        RunResult r = run_unregularized(e0, *exp.model, data.obs, cfg.unregularized_iters, opts);
        out.records = std::move(r.records);
        out.estimate = std::move(r.estimate);
        break;
      }
      case RunMode::Smoother: {
        Ensemble prior = e0;
        predict(prior, *exp.model);
        const long ne = static_cast<long>(prior.size());
        out.records.push_back(smoother_record(0, prior, exp, data.obs, ne));
        Ensemble post = ensemble_smoother(prior, *exp.model, data.obs, rng::derive(seed, rng::domain::kPerturbation));
        predict(post, *exp.model);
        out.records.push_back(smoother_record(1, post, exp, data.obs, 2 * ne));
        out.estimate = Field(post.discretization(), post.mean());
        break;
      }
      case RunMode::Lm: {
        const ReducedSpace space = cfg.lm_basis == LmBasis::Ensemble ? ReducedSpace::from_ensemble(e0) : kl_space(exp);
        LmResult r = run_lm(space, *exp.model, data.obs, LmConfig{cfg.eki, cfg.fd_step}, opts);
        out.records = std::move(r.records);
        out.estimate = std::move(r.estimate);
        out.converged = r.converged;
        break;
      }
    }
    out.misclassified_fraction = exp.misclassified(out.estimate->values());
  } catch (const std::exception& e) {
    out.error_message = e.what();
    if (out.error_message.empty()) out.error_message = "unknown failure";
  }
  return out;
}

}  // namespace reki
