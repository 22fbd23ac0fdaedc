#include "reki/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace reki {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("report: cannot write " + path.string());
}

template <class F>
void write_csv(const fs::path& path, F&& body) {
  std::ostringstream s;
  body(s);
  write_text(path, s.str());
}

void prepare_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("report: cannot create directory " + dir.string());
  const fs::path probe = dir / ".reki_write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw std::runtime_error("report: directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

nlohmann::ordered_json describe(const Discretization& d) {
  nlohmann::ordered_json j;
  if (const auto* g = std::get_if<Grid>(&d)) {
    j["kind"] = "grid";
    j["nx"] = g->nx;
    j["ny"] = g->ny;
    j["bounds"] = {g->x0, g->x1, g->y0, g->y1};
  } else {
    const auto& m = std::get<MeshHandle>(d);
    j["kind"] = "mesh";
    j["elements"] = m->element_count();
    j["vertices"] = m->vertex_count();
  }
  return j;
}

std::vector<std::string> assumed_items(const ExperimentConfig& cfg) {
  std::vector<std::string> a;
  if (is_eit(cfg.model)) {
    a.push_back("electrode arc length and inter-electrode gaps");
    if (cfg.truth_kind == TruthKind::Shapes) a.push_back("inclusion geometry and conductivity values of the truth");
  } else {
    a.push_back("well locations: equispaced lattice of " + std::to_string(cfg.lattice * cfg.lattice) + " points");
    if (cfg.truth_kind == TruthKind::Shapes) a.push_back("facies geometry and conductivity values of the truth");
  }
  if (cfg.prior_spec.family == Family::Spherical || cfg.truth_spec.family == Family::Spherical) {
    a.push_back("spherical covariance range");
  }
  return a;
}

struct AlphaPoint {
  int n;
  double alpha;
};

/// Accepted regularization parameters of one run (stopping record excluded).
std::vector<AlphaPoint> accepted_alphas(const std::vector<IterationRecord>& records) {
  std::vector<AlphaPoint> out;
  for (const auto& r : records) {
    if (!r.stopped && std::isfinite(r.alpha)) out.push_back({r.n, r.alpha});
  }
  return out;
}

void write_alpha_csv(std::ostream& out, const std::vector<std::pair<std::uint64_t, std::vector<IterationRecord>>>& runs) {
  out << "seed,n,alpha\n";
  for (const auto& [seed, recs] : runs) {
    for (const auto& p : accepted_alphas(recs)) out << seed << ',' << p.n << ',' << num(p.alpha) << '\n';
  }
}

void write_plots(const fs::path& dir, const std::vector<std::pair<std::uint64_t, std::vector<IterationRecord>>>& runs,
                 std::optional<double> noise_line) {
  SvgChart misfit{"Data misfit", "iteration", "misfit", true, {}, noise_line};
  SvgChart error{"Relative error", "iteration", "relative error", false, {}, std::nullopt};
  SvgChart alpha{"Regularization parameter", "iteration", "alpha", true, {}, std::nullopt};
  for (const auto& [seed, recs] : runs) {
    const std::string name = "seed " + std::to_string(seed);
    SvgSeries m{name, {}, {}};
    SvgSeries e{name, {}, {}};
    SvgSeries a{name, {}, {}};
    for (const auto& r : recs) {
      m.x.push_back(r.n);
      m.y.push_back(r.misfit);
      e.x.push_back(r.n);
      e.y.push_back(r.rel_error);
    }
    for (const auto& p : accepted_alphas(recs)) {
      a.x.push_back(p.n);
      a.y.push_back(p.alpha);
    }
    misfit.series.push_back(std::move(m));
    error.series.push_back(std::move(e));
    alpha.series.push_back(std::move(a));
  }
  write_text(dir / "misfit.svg", misfit.render());
  write_text(dir / "error.svg", error.render());
  write_text(dir / "alpha.svg", alpha.render());
}

std::string value_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void write_mean_curve_csv(std::ostream& out, const std::vector<MeanCurveRow>& rows) {
  out << "n,count,misfit,rel_error\n";
  for (const auto& r : rows) out << r.n << ',' << r.count << ',' << num(r.misfit) << ',' << num(r.rel_error) << '\n';
}

void write_summary_csv(std::ostream& out, const ReplicateResult& res) {
  out << "seed,failed,converged,stop_iteration,terminal_misfit,terminal_error,min_error_iteration,semiconvergence,"
         "interior_minimum,forward_evals,misclassified_fraction,error\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : res.runs) {
    out << r.seed << ',' << (r.failed() ? 1 : 0) << ',' << (r.converged ? 1 : 0) << ',';
    if (r.failed() || r.records.empty()) {
      out << "-1," << num(nan) << ',' << num(nan) << ",-1,0,0,0," << num(nan) << ',';
    } else {
      const IterationRecord& last = r.records.back();
      const auto best = std::min_element(r.records.begin(), r.records.end(),
                                         [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
      out << last.n << ',' << num(last.misfit) << ',' << num(last.rel_error) << ',' << best->n << ','
          << (r.semiconvergence() ? 1 : 0) << ',' << (r.interior_minimum() ? 1 : 0) << ',' << last.forward_evals << ','
          << num(r.misclassified_fraction.value_or(nan)) << ',';
    }
    out << quoted(r.error_message) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  out << to_string(table.axis)
      << ",replicates,failures,converged,mean_stop_iteration,mean_terminal_misfit,mean_terminal_error,"
         "semiconvergence_frequency,mean_forward_evals\n";
  for (const auto& r : table.rows) {
    out << num(r.value) << ',' << r.replicates << ',' << r.failures << ',' << r.converged << ','
        << num(r.mean_stop_iteration) << ',' << num(r.mean_terminal_misfit) << ',' << num(r.mean_terminal_error) << ','
        << num(r.semiconvergence_frequency) << ',' << num(r.mean_forward_evals) << '\n';
  }
}

void write_data_csv(std::ostream& out, const SyntheticData& data) {
  out << "index,y,clean,noise,gamma\n";
  for (Eigen::Index i = 0; i < data.obs.y.size(); ++i) {
    out << i << ',' << num(data.obs.y[i]) << ',' << num(data.clean[i]) << ',' << num(data.noise[i]) << ','
        << num(data.obs.gamma_diag[i]) << '\n';
  }
}

void report(const Experiment& exp, const SyntheticData& data, const ReplicateResult& res, const fs::path& dir) {
  if (res.runs.empty()) throw std::invalid_argument("report: no runs");
  std::vector<std::pair<std::uint64_t, std::vector<IterationRecord>>> ok;
  for (const auto& r : res.runs) {
    if (r.failed()) continue;
    if (r.records.empty()) throw std::invalid_argument("report: run for seed " + std::to_string(r.seed) + " has no records");
    ok.emplace_back(r.seed, r.records);
  }
  if (ok.empty()) throw std::invalid_argument("report: every run failed");
  prepare_directory(dir);

  const bool lm = exp.cfg.mode == RunMode::Lm;
  nlohmann::ordered_json forward = nlohmann::ordered_json::object();
  long total = 0;
  for (const auto& r : res.runs) {
    const std::string s = std::to_string(r.seed);
    if (r.failed()) continue;
    write_csv(dir / ("records_seed" + s + ".csv"), [&](std::ostream& o) { write_records_csv(o, r.records, lm); });
    if (r.estimate) write_field(dir / ("estimate_seed" + s + ".fld"), *r.estimate);
    forward[s] = r.records.back().forward_evals;
    total += r.records.back().forward_evals;
  }
  write_csv(dir / "mean_curve.csv", [&](std::ostream& o) { write_mean_curve_csv(o, res.mean_curve); });
  write_csv(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, res); });
  write_csv(dir / "data.csv", [&](std::ostream& o) { write_data_csv(o, data); });
  write_csv(dir / "alpha.csv", [&](std::ostream& o) { write_alpha_csv(o, ok); });
  write_field(dir / "truth.fld", exp.truth);
  write_text(dir / "config.ini", to_ini(exp.cfg));
  write_plots(dir, ok, exp.cfg.eki.tau * data.obs.eta);

  nlohmann::ordered_json m;
  m["config_hash"] = config_hash(exp.cfg);
  m["commit"] = git_commit();
  m["model"] = to_string(exp.cfg.model);
  m["mode"] = to_string(exp.cfg.mode);
  m["seeds"] = exp.cfg.seeds;
  m["replicates"] = res.runs.size();
  m["failures"] = res.failures;
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (const auto& r : res.runs) {
    if (r.failed()) errors[std::to_string(r.seed)] = r.error_message;
  }
  m["failed_runs"] = errors;
  m["truth_discretization"] = describe(exp.truth_disc);
  m["inversion_discretization"] = describe(exp.inversion_disc);
  m["observations"] = data.obs.size();
  m["noise_convention"] = to_string(exp.cfg.noise_convention);
  m["noise_percent"] = exp.cfg.noise_percent;
  m["noise_seed"] = data.noise_seed;
  m["eta"] = data.obs.eta;
  m["realized_noise_ratio"] = data.clean.norm() > 0 ? data.noise.norm() / data.clean.norm() : 0.0;
  m["forward_evals"] = forward;
  m["forward_evals_total"] = total;
  m["assumed"] = assumed_items(exp.cfg);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void report_sweep(const ExperimentConfig& cfg, const SweepTable& table, const fs::path& dir) {
  if (table.rows.empty() || table.rows.size() != table.results.size()) throw std::invalid_argument("report_sweep: empty table");
  prepare_directory(dir);
  write_csv(dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, table); });
  SvgChart error{"Mean relative error, " + to_string(table.axis) + " sweep", "iteration", "relative error", false, {}, std::nullopt};
  SvgChart misfit{"Mean data misfit, " + to_string(table.axis) + " sweep", "iteration", "misfit", true, {}, std::nullopt};
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string label = value_label(table.rows[i].value);
    const auto& res = table.results[i];
    write_csv(dir / ("mean_curve_" + to_string(table.axis) + "_" + label + ".csv"),
              [&](std::ostream& o) { write_mean_curve_csv(o, res.mean_curve); });
    write_csv(dir / ("summary_" + to_string(table.axis) + "_" + label + ".csv"),
              [&](std::ostream& o) { write_summary_csv(o, res); });
    SvgSeries e{to_string(table.axis) + "=" + label, {}, {}};
    SvgSeries m = e;
    for (const auto& r : res.mean_curve) {
      e.x.push_back(r.n);
      e.y.push_back(r.rel_error);
      m.x.push_back(r.n);
      m.y.push_back(r.misfit);
    }
    error.series.push_back(std::move(e));
    misfit.series.push_back(std::move(m));
  }
  write_text(dir / "error.svg", error.render());
  write_text(dir / "misfit.svg", misfit.render());
  write_text(dir / "config.ini", to_ini(cfg));

  nlohmann::ordered_json m;
  m["config_hash"] = config_hash(cfg);
  m["commit"] = git_commit();
  m["axis"] = to_string(table.axis);
  std::vector<double> values;
  for (const auto& r : table.rows) values.push_back(r.value);
  m["values"] = values;
  m["seeds"] = cfg.seeds;
  m["assumed"] = assumed_items(cfg);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<IterationRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_records_csv: empty input");
  std::vector<std::string> cols;
  {
    std::stringstream h(line);
    std::string c;
    while (std::getline(h, c, ',')) cols.push_back(c);
  }
  const std::vector<std::string> expected{"n", "alpha", "doublings", "misfit", "mean_output_misfit", "rel_error",
                                          "forward_evals", "stopped"};
  if (cols.size() < expected.size() || !std::equal(expected.begin(), expected.end(), cols.begin())) {
    throw std::runtime_error("read_records_csv: unexpected header: " + line);
  }
  const bool jac = cols.size() == expected.size() + 1 && cols.back() == "jacobian_evals";
  if (cols.size() != expected.size() && !jac) throw std::runtime_error("read_records_csv: unexpected header: " + line);
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream s(line);
    std::vector<std::string> f;
    std::string c;
    while (std::getline(s, c, ',')) f.push_back(c);
    if (f.size() != cols.size()) throw std::runtime_error("read_records_csv: bad row: " + line);
    IterationRecord r;
    r.n = std::stoi(f[0]);
    r.alpha = std::stod(f[1]);
    r.doublings = std::stoi(f[2]);
    r.misfit = std::stod(f[3]);
    r.mean_output_misfit = std::stod(f[4]);
    r.rel_error = std::stod(f[5]);
    r.forward_evals = std::stol(f[6]);
    r.stopped = f[7] == "1";
    if (jac) r.jacobian_evals = std::stol(f[8]);
    out.push_back(r);
  }
  return out;
}

void report_from_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("report: not a directory: " + dir.string());
  std::map<std::uint64_t, std::vector<IterationRecord>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string prefix = "records_seed";
    if (name.rfind(prefix, 0) != 0 || entry.path().extension() != ".csv") continue;
    const std::uint64_t seed = std::stoull(name.substr(prefix.size()));
    std::ifstream in(entry.path());
    found[seed] = read_records_csv(in);
  }
  if (found.empty()) throw std::runtime_error("report: no records_seed*.csv files in " + dir.string());
  std::vector<std::pair<std::uint64_t, std::vector<IterationRecord>>> runs(found.begin(), found.end());
  for (const auto& [seed, recs] : runs) {
    if (recs.empty()) throw std::invalid_argument("report: empty records for seed " + std::to_string(seed));
  }
  write_csv(dir / "alpha.csv", [&](std::ostream& o) { write_alpha_csv(o, runs); });
  write_plots(dir, runs, std::nullopt);
}

}  // namespace reki
