#include "reki/eki.hpp"
#include "reki/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reki {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

IterationRecord observe_state(int n, const Ensemble& ens, const ForwardModel& model, const ObservationSet& obs,
                              const RunOptions& opts) {
  IterationRecord rec;
  rec.n = n;
  rec.alpha = kNaN;
  rec.misfit = obs.misfit(ens.output_mean());
  rec.forward_evals = static_cast<long>(ens.size()) * (n + 1);
  const Eigen::VectorXd mean = ens.mean();
  rec.mean_output_misfit = opts.log_estimate_misfit ? obs.misfit(model.evaluate(mean)) : kNaN;
  rec.rel_error = opts.error ? opts.error(mean) : kNaN;
  return rec;
}

void check_inputs(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs) {
  obs.validate();
  if (model.output_size() != obs.size()) throw std::invalid_argument("model output size does not match the data");
  if (model.input_size() != initial.dim()) throw std::invalid_argument("model input size does not match the ensemble");
}

}  // namespace

RunResult run(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs, const EkiConfig& cfg,
              const RunOptions& opts) {
  cfg.validate();
  check_inputs(initial, model, obs);
  Ensemble ens = initial;
  std::vector<IterationRecord> records;
  bool converged = false;
  double seed = cfg.alpha0_init;
  for (int n = 0;; ++n) {
    predict(ens, model);
    IterationRecord rec = observe_state(n, ens, model, obs, opts);
    if (check_discrepancy(ens.output_mean(), obs, cfg)) {
      rec.stopped = true;
      records.push_back(rec);
      converged = true;
      break;
    }
    if (n == cfg.max_iters) {
      records.push_back(rec);
      break;
    }
    const KalmanOperators ops = build_operators(ens);
    const AlphaSelection sel = select_alpha(ops, obs, cfg, seed);
    rec.alpha = sel.alpha;
    rec.doublings = sel.doublings;
    records.push_back(rec);
    ens = analysis_update(ens, ops, obs, sel.alpha);
    seed = std::max(sel.alpha / 2.0, cfg.alpha_floor);
  }
  return {Field(ens.discretization(), ens.mean()), std::move(records), converged, std::move(ens)};
}

RunResult run_unregularized(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs, int iters,
                            const RunOptions& opts) {
  if (iters < 0) throw std::invalid_argument("run_unregularized: negative iteration count");
  check_inputs(initial, model, obs);
  Ensemble ens = initial;
  std::vector<IterationRecord> records;
  for (int n = 0;; ++n) {
    predict(ens, model);
    IterationRecord rec = observe_state(n, ens, model, obs, opts);
    if (n == iters) {
      records.push_back(rec);
      break;
    }
    rec.alpha = 1.0;
    records.push_back(rec);
    ens = analysis_update(ens, build_operators(ens), obs, 1.0);
  }
  return {Field(ens.discretization(), ens.mean()), std::move(records), false, std::move(ens)};
}

Ensemble ensemble_smoother(const Ensemble& initial, const ForwardModel& model, const ObservationSet& obs,
                           std::uint64_t seed) {
  check_inputs(initial, model, obs);
  Ensemble ens = initial;
  if (!ens.has_outputs()) predict(ens, model);
  const KalmanOperators ops = build_operators(ens);
  const std::uint64_t key = rng::derive(seed, rng::domain::kPerturbation);
  const Eigen::VectorXd sd = obs.gamma_diag.cwiseSqrt();
  Eigen::MatrixXd data(obs.size(), ens.size());
  for (Eigen::Index j = 0; j < ens.size(); ++j) {
    for (Eigen::Index m = 0; m < obs.size(); ++m) {
      data(m, j) = obs.y[m] + sd[m] * rng::normal(key, std::uint64_t(j), std::uint64_t(m));
    }
  }
  return analysis_update(ens, ops, obs.gamma_diag, data, 1.0);
}

}  // namespace reki
