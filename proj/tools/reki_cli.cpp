// Command-line driver: gen-data, run, sweep, report.
#include "reki/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace reki;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIters = 2;

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::string seeds;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "Experiment configuration (INI)")->check(CLI::ExistingFile);
  app->add_option("-p,--preset", c.preset, "Built-in preset: darcy, darcy-levelset, eit, eit-levelset");
  app->add_option("-o,--out", c.out, "Output directory, relative to $REKI_OUTPUT_ROOT when that is set");
  app->add_option("-s,--seeds", c.seeds, "Comma-separated ensemble seeds (overrides the config)");
  app->add_option("-t,--threads", c.threads, "OpenMP threads (0 keeps the runtime default)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    const unsigned long long v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad seed '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad value '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

ExperimentConfig load(const Common& c) {
  if (!c.config.empty() && !c.preset.empty()) throw std::invalid_argument("give either --config or --preset, not both");
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    cfg = parse_config("[experiment]\nmodel = " + (c.preset.empty() ? std::string("darcy") : c.preset) + "\n");
  }
  if (!c.seeds.empty()) cfg.seeds = parse_seeds(c.seeds);
  cfg.validate();
#ifdef _OPENMP
  if (c.threads > 0) omp_set_num_threads(c.threads);
#endif
  return cfg;
}

fs::path output_dir(const Common& c, const ExperimentConfig& cfg, const std::string& what) {
  fs::path p = c.out.empty() ? fs::path("reki-" + what + "-" + config_hash(cfg)) : fs::path(c.out);
  if (const char* root = std::getenv("REKI_OUTPUT_ROOT"); root && *root && p.is_relative()) p = fs::path(root) / p;
  return p;
}

int exit_code(const ExperimentConfig& cfg, const ReplicateResult& res) {
  if (res.failures > 0) return kExitError;
  // Only the regularized and LM iterations have a stopping rule to miss.
  if (cfg.mode == RunMode::Regularized || cfg.mode == RunMode::Lm) {
    return res.all_converged() ? kExitConverged : kExitMaxIters;
  }
  return kExitConverged;
}

void print_run(const ReplicateResult& res) {
  for (const auto& r : res.runs) {
    if (r.failed()) {
      std::cout << "seed " << r.seed << ": failed: " << r.error_message << '\n';
      continue;
    }
    const auto& last = r.records.back();
    std::cout << "seed " << r.seed << ": n=" << last.n << " misfit=" << last.misfit << " rel_error=" << last.rel_error
              << " forward_evals=" << last.forward_evals << (r.converged ? " (discrepancy reached)" : "") << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularizing ensemble Kalman inversion experiments"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("gen-data", "Synthesize truth and noisy data");
  add_common(gen, gen_opts);

  Common run_opts;
  std::string mode;
  auto* run_cmd = app.add_subcommand("run", "Run seed-replicated inversions and write a report");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("-m,--mode", mode, "regularized, unregularized, smoother or lm (overrides the config)");

  Common sweep_opts;
  std::string axis;
  std::string values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter and tabulate replicate summaries");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("-a,--axis", axis, "Ne, rho, M, noise or L")->required();
  sweep_cmd->add_option("-v,--values", values, "Comma-separated axis values")->required();

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Rebuild plots from an existing run directory");
  report_cmd->add_option("dir", report_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = load(gen_opts);
      const Experiment exp = Experiment::build(cfg);
      const SyntheticData data = generate_data(exp);
      const fs::path dir = output_dir(gen_opts, cfg, "data");
      fs::create_directories(dir);
      std::ofstream(dir / "data.csv") << [&] {
        std::ostringstream s;
        write_data_csv(s, data);
        return s.str();
      }();
      write_field(dir / "truth.fld", exp.truth);
      std::ofstream(dir / "config.ini") << to_ini(cfg);
      std::cout << "observations=" << data.obs.size() << " eta=" << data.obs.eta << " -> " << dir.string() << '\n';
      return kExitConverged;
    }
    if (run_cmd->parsed()) {
      ExperimentConfig cfg = load(run_opts);
      if (!mode.empty()) cfg.mode = run_mode_from_string(mode);
      const Experiment exp = Experiment::build(cfg);
      const SyntheticData data = generate_data(exp);
      const ReplicateResult res = run_replicated(exp, data, cfg.seeds);
      const fs::path dir = output_dir(run_opts, cfg, "run");
      report(exp, data, res, dir);
      print_run(res);
      std::cout << "report -> " << dir.string() << '\n';
      return exit_code(cfg, res);
    }
    if (sweep_cmd->parsed()) {
      const ExperimentConfig cfg = load(sweep_opts);
      const SweepTable table = sweep(cfg, sweep_axis_from_string(axis), parse_values(values));
      const fs::path dir = output_dir(sweep_opts, cfg, "sweep-" + axis);
      report_sweep(cfg, table, dir);
      write_sweep_csv(std::cout, table);
      int code = kExitConverged;
      for (const auto& r : table.results) code = std::max(code, exit_code(cfg, r) == kExitError ? 3 : exit_code(cfg, r));
      return code == 3 ? kExitError : code;
    }
    if (report_cmd->parsed()) {
      report_from_directory(report_dir);
      std::cout << "plots rebuilt in " << report_dir << '\n';
      return kExitConverged;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
