#include "reki/harness.hpp"

#include <cmath>
#include <limits>

namespace reki {

bool ReplicateResult::all_converged() const {
  for (const auto& r : runs) {
    if (r.failed() || !r.converged) return false;
  }
  return !runs.empty();
}

ReplicateResult run_replicated(const Experiment& exp, const SyntheticData& data, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_replicated: no seeds");
  ReplicateResult res;
  res.runs.resize(seeds.size());
  // Each replicate is self-contained, so the schedule cannot change any result.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < seeds.size(); ++i) res.runs[i] = run_single(exp, data, seeds[i]);

  std::size_t len = 0;
  for (const auto& r : res.runs) {
    if (r.failed()) {
      ++res.failures;
    } else {
      len = std::max(len, r.records.size());
    }
  }
  for (std::size_t n = 0; n < len; ++n) {
    MeanCurveRow row;
    row.n = static_cast<int>(n);
    for (const auto& r : res.runs) {
      if (r.failed() || n >= r.records.size()) continue;
      ++row.count;
      row.misfit += r.records[n].misfit;
      row.rel_error += r.records[n].rel_error;
    }
    row.misfit /= row.count;
    row.rel_error /= row.count;
    res.mean_curve.push_back(row);
  }
  return res;
}

ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value) {
  ExperimentConfig c = cfg;
  auto integral = [&](const char* what) {
    if (value != std::floor(value) || value < 1 || value > 1e9) {
      throw std::invalid_argument(std::string("sweep: ") + what + " needs a positive integer value");
    }
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::Ne:
      c.ne = integral("Ne");
      break;
    case SweepAxis::Rho: {
      const double margin = cfg.eki.tau - 1.0 / cfg.eki.rho;
      c.eki.rho = value;
      c.eki.tau = 1.0 / value + margin;
      break;
    }
    case SweepAxis::M: {
      if (is_eit(cfg.model)) throw std::invalid_argument("sweep: M is fixed by the electrode layout for EIT");
      const int m = integral("M");
      const int side = static_cast<int>(std::lround(std::sqrt(double(m))));
      if (side * side != m) throw std::invalid_argument("sweep: M must be a perfect square (lattice of wells)");
      c.lattice = side;
      break;
    }
    case SweepAxis::Noise:
      c.noise_percent = value;
      break;
    case SweepAxis::L:
      if (c.prior_spec.family == Family::WhittleMatern) {
        c.prior_spec.L = value;
      } else if (c.prior_spec.family == Family::Spherical) {
        c.prior_spec.a = value;
      } else {
        throw std::invalid_argument("sweep: the Laplacian-power prior has no correlation length");
      }
      break;
  }
  c.validate();
  return c;
}

SweepRow summarize(double value, const ReplicateResult& res) {
  SweepRow row;
  row.value = value;
  row.replicates = static_cast<int>(res.runs.size());
  row.failures = res.failures;
  int ok = 0;
  int semi = 0;
  for (const auto& r : res.runs) {
    if (r.failed() || r.records.empty()) continue;
    ++ok;
    const IterationRecord& last = r.records.back();
    row.converged += r.converged ? 1 : 0;
    row.mean_stop_iteration += last.n;
    row.mean_terminal_misfit += last.misfit;
    row.mean_terminal_error += last.rel_error;
    row.mean_forward_evals += double(last.forward_evals);
    semi += r.semiconvergence() ? 1 : 0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double d = ok > 0 ? double(ok) : nan;
  row.mean_stop_iteration /= d;
  row.mean_terminal_misfit /= d;
  row.mean_terminal_error /= d;
  row.mean_forward_evals /= d;
  row.semiconvergence_frequency = semi / d;
  return row;
}

SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  SweepTable table;
  table.axis = axis;
  // Ne and rho leave the discretizations, truth and data untouched.
  const bool shared = axis == SweepAxis::Ne || axis == SweepAxis::Rho;
  std::optional<Experiment> base;
  std::optional<SyntheticData> base_data;
  if (shared) {
    base = Experiment::build(cfg);
    base_data = generate_data(*base);
  }
  for (double v : values) {
    const ExperimentConfig c = with_axis_value(cfg, axis, v);
    ReplicateResult res;
    if (shared) {
      Experiment e = *base;
      e.cfg = c;
      res = run_replicated(e, *base_data, c.seeds);
    } else {
      const Experiment e = Experiment::build(c);
      res = run_replicated(e, generate_data(e), c.seeds);
    }
    table.rows.push_back(summarize(v, res));
    table.results.push_back(std::move(res));
  }
  return table;
}

}  // namespace reki
