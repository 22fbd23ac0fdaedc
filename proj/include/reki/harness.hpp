#pragma once

#include "reki/cem.hpp"
#include "reki/darcy.hpp"
#include "reki/eki.hpp"
#include "reki/grf.hpp"
#include "reki/levelset.hpp"
#include "reki/lm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reki {

enum class ModelKind { Darcy, Eit, DarcyLevelSet, EitLevelSet };
enum class RunMode { Regularized, Unregularized, Smoother, Lm };
enum class TruthKind { Grf, Shapes };
enum class NoiseConvention { GlobalPercent, PerEntryPercent };
enum class LmBasis { Ensemble, Kl };
enum class SweepAxis { Ne, Rho, M, Noise, L };

std::string to_string(ModelKind k);
std::string to_string(RunMode m);
std::string to_string(TruthKind k);
std::string to_string(NoiseConvention c);
std::string to_string(LmBasis b);
std::string to_string(SweepAxis a);
ModelKind model_kind_from_string(const std::string& s);
RunMode run_mode_from_string(const std::string& s);
SweepAxis sweep_axis_from_string(const std::string& s);

bool is_level_set(ModelKind k);
bool is_eit(ModelKind k);

struct ExperimentConfig {
  ModelKind model = ModelKind::Darcy;
  RunMode mode = RunMode::Regularized;

  // Truth.
  TruthKind truth_kind = TruthKind::Grf;
  CovarianceSpec truth_spec = CovarianceSpec::spherical(1.0, 2.0);
  std::uint64_t truth_seed = 1;
  std::vector<Shape> truth_shapes;
  LevelSetMap conductivity;  // inside / outside values for shape truths and level-set runs

  // Discretizations. Darcy grids are n x n over [0,6]^2; the EIT prior grid covers [-1,1]^2.
  int truth_grid = 80;
  int inversion_grid = 40;
  int kl_grid = 40;
  int eit_truth_elements = 1936;
  int eit_inversion_elements = 1600;
  double contact_impedance = 0.01;

  // Data.
  int lattice = 10;  // Darcy: M = lattice^2 wells
  NoiseConvention noise_convention = NoiseConvention::GlobalPercent;
  double noise_percent = 1.0;
  bool allow_zero_noise = false;
  std::uint64_t noise_seed = 7;
  double gamma_floor = 1e-8;  // relative to max |G(u_true)|

  // Ensemble and iteration.
  int ne = 150;
  CovarianceSpec prior_spec = CovarianceSpec::spherical(1.0, 2.0);
  Truncation prior_truncation{};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  EkiConfig eki{};
  int unregularized_iters = 30;
  bool log_estimate_misfit = true;

  // LM reference.
  LmBasis lm_basis = LmBasis::Ensemble;
  int lm_modes = 150;
  double fd_step = 1e-5;

  static ExperimentConfig desk_darcy();
  static ExperimentConfig desk_facies();
  static ExperimentConfig desk_eit();
  static ExperimentConfig desk_eit_level_set();

  void validate() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical INI text: every key, fixed order, round-trip exact.
std::string to_ini(const ExperimentConfig& cfg);
/// FNV-1a hash of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Everything fixed by the configuration: discretizations, models, prior and truth.
struct Experiment {
  ExperimentConfig cfg;
  Discretization truth_disc;
  Discretization inversion_disc;
  std::shared_ptr<const ForwardModel> truth_model;  // takes log-conductivity on truth_disc
  std::shared_ptr<const ForwardModel> model;        // takes the unknown on inversion_disc
  KLBasis prior;
  Field truth{Grid::square(1, 0.0, 1.0), Eigen::VectorXd::Zero(1)};  // log-conductivity on truth_disc
  Eigen::VectorXd truth_reference;       // on inversion_disc: log-conductivity, or conductivity for level-set runs
  std::optional<Field> truth_inside;     // level-set runs: per-cell area fraction inside the true region

  static Experiment build(const ExperimentConfig& cfg);

  Ensemble initial_ensemble(std::uint64_t seed) const;
  /// Relative L2 error of an estimate (mapped to conductivity for level-set runs).
  double error(const Eigen::VectorXd& estimate) const;
  RunOptions run_options() const;
  std::optional<double> misclassified(const Eigen::VectorXd& estimate) const;
};

struct SyntheticData {
  ObservationSet obs;
  Eigen::VectorXd clean;  // G(u_true)
  Eigen::VectorXd noise;
  std::uint64_t noise_seed = 0;
};

SyntheticData generate_data(const Experiment& exp);
SyntheticData generate_data(const ExperimentConfig& cfg);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  std::optional<Field> estimate;
  bool converged = false;
  std::string error_message;  // non-empty when the run failed

  bool failed() const { return !error_message.empty(); }
  /// Error attains its minimum strictly before the final record.
  bool semiconvergence() const;
  /// Error attains its minimum strictly inside the record list.
  bool interior_minimum() const;
  std::optional<double> misclassified_fraction;
};

RunOutcome run_single(const Experiment& exp, const SyntheticData& data, std::uint64_t seed);

struct MeanCurveRow {
  int n = 0;
  int count = 0;
  double misfit = 0.0;
  double rel_error = 0.0;
};

struct ReplicateResult {
  std::vector<RunOutcome> runs;
  std::vector<MeanCurveRow> mean_curve;
  int failures = 0;

  bool all_converged() const;
};

/// One run per seed on shared data; failed runs are kept with their message and left out of the means.
ReplicateResult run_replicated(const Experiment& exp, const SyntheticData& data, const std::vector<std::uint64_t>& seeds);

struct SweepRow {
  double value = 0.0;
  int replicates = 0;
  int failures = 0;
  int converged = 0;
  double mean_stop_iteration = 0.0;
  double mean_terminal_misfit = 0.0;
  double mean_terminal_error = 0.0;
  double semiconvergence_frequency = 0.0;
  double mean_forward_evals = 0.0;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::Ne;
  std::vector<SweepRow> rows;
  std::vector<ReplicateResult> results;
};

/// Applies one axis value to a config (tau keeps its margin above 1/rho on rho sweeps).
ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value);
SweepRow summarize(double value, const ReplicateResult& res);
SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values);

void write_mean_curve_csv(std::ostream& out, const std::vector<MeanCurveRow>& rows);
void write_summary_csv(std::ostream& out, const ReplicateResult& res);
void write_sweep_csv(std::ostream& out, const SweepTable& table);
void write_data_csv(std::ostream& out, const SyntheticData& data);

/// Writes records, summaries, plots, estimates and a manifest. Validates before writing anything.
void report(const Experiment& exp, const SyntheticData& data, const ReplicateResult& res, const std::filesystem::path& dir);
void report_sweep(const ExperimentConfig& cfg, const SweepTable& table, const std::filesystem::path& dir);
/// Rebuilds plots from the records_seed*.csv files of an earlier run directory.
void report_from_directory(const std::filesystem::path& dir);

std::vector<IterationRecord> read_records_csv(std::istream& in);

// Binary fields: "REKIFLD\0", version, discretization descriptor, row-major float64 values.
void write_field(const std::filesystem::path& path, const Field& field);
/// Grid fields are self-describing; mesh fields need the mesh they were written on.
Field read_field(const std::filesystem::path& path, MeshHandle mesh = nullptr);

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<SvgSeries> series;
  std::optional<double> reference_line;

  std::string render() const;
};

std::string git_commit();

}  // namespace reki
