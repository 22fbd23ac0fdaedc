#include "doctest.h"

#include "reki/harness.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace reki;
namespace fs = std::filesystem;

namespace {

// A Darcy problem small enough to run many replicates in a unit test.
ExperimentConfig tiny_darcy() {
  ExperimentConfig c = ExperimentConfig::desk_darcy();
  c.truth_grid = 16;
  c.inversion_grid = 8;
  c.kl_grid = 8;
  c.lattice = 3;
  c.ne = 12;
  c.seeds = {1, 2};
  c.eki.max_iters = 15;
  c.unregularized_iters = 5;
  c.lm_modes = 6;
  return c;
}

ExperimentConfig tiny_facies() {
  ExperimentConfig c = ExperimentConfig::desk_facies();
  c.truth_grid = 16;
  c.inversion_grid = 8;
  c.kl_grid = 8;
  c.lattice = 3;
  c.ne = 12;
  c.seeds = {3};
  c.eki.max_iters = 5;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reki_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class AlwaysFails final : public ForwardModel {
 public:
  explicit AlwaysFails(Eigen::Index n) : n_(n) {}
  Eigen::Index input_size() const override { return n_; }
  Eigen::Index output_size() const override { return 9; }
  Eigen::VectorXd evaluate(const Eigen::VectorXd&) const override { throw std::runtime_error("solver diverged"); }

 private:
  Eigen::Index n_;
};

}  // namespace

TEST_CASE("config text round-trips for every preset") {
  for (const auto& c : {ExperimentConfig::desk_darcy(), ExperimentConfig::desk_facies(), ExperimentConfig::desk_eit(),
                        ExperimentConfig::desk_eit_level_set(), tiny_darcy()}) {
    const std::string text = to_ini(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(to_ini(back) == text);
    CHECK(config_hash(back) == config_hash(c));
  }
  CHECK(config_hash(ExperimentConfig::desk_darcy()) != config_hash(ExperimentConfig::desk_facies()));
}

TEST_CASE("config: presets and overrides") {
  const ExperimentConfig c = parse_config("[experiment]\nmodel = eit\n[ensemble]\nsize = 40\nseeds = 4,9\n");
  CHECK(c.model == ModelKind::Eit);
  CHECK(c.noise_convention == NoiseConvention::PerEntryPercent);
  CHECK(c.ne == 40);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 9});
  const ExperimentConfig f = parse_config("[experiment]\nmodel = darcy-levelset\n");
  CHECK(f.truth_kind == TruthKind::Shapes);
  CHECK(f.truth_shapes.size() == 2);
}

TEST_CASE("config rejections") {
  CHECK_THROWS_AS(parse_config("[data]\nnoise_pct = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\nmodel = heat\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[grids]\ntruth = 40\ninversion = 40\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[grids]\ntruth = 30\ninversion = 40\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[data]\nnoise_percent = 0\n"), std::invalid_argument);
  CHECK_NOTHROW(parse_config("[data]\nnoise_percent = 0\nallow_zero_noise = true\n"));
  CHECK_THROWS_AS(parse_config("[experiment]\nmodel = darcy-levelset\n[truth]\nkind = grf\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[eki]\nrho = 0.7\ntau = 1.2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[ensemble]\nsize = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[ensemble]\nseeds = 1,x\n"), std::invalid_argument);
}

TEST_CASE("experiment keeps truth and inversion discretizations distinct") {
  const Experiment e = Experiment::build(tiny_darcy());
  CHECK_FALSE(same_discretization(e.truth_disc, e.inversion_disc));
  CHECK(e.truth.values().size() == 256);
  CHECK(e.truth_reference.size() == 64);
  CHECK_FALSE(e.truth_inside.has_value());
  const Ensemble a = e.initial_ensemble(5);
  const Ensemble b = e.initial_ensemble(5);
  CHECK(a.members() == b.members());
  CHECK(a.members() != e.initial_ensemble(6).members());
  CHECK(e.error(e.truth_reference) == 0.0);
}

TEST_CASE("global-percent data: exact 1% scaling, realized eta, gamma proportional to |G|") {
  const Experiment e = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(e);
  const Eigen::VectorXd xi = d.obs.y - d.clean;
  CHECK(std::abs(xi.norm() / d.clean.norm() - 0.01) < 1e-12);
  double w = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) w += xi[i] * xi[i] / d.obs.gamma_diag[i];
  CHECK(d.obs.eta == doctest::Approx(std::sqrt(w)).epsilon(1e-13));
  // Heads are far from zero here, so the floor is inactive.
  const Eigen::ArrayXd ratio = d.obs.gamma_diag.array() / d.clean.cwiseAbs().array();
  CHECK((ratio.maxCoeff() - ratio.minCoeff()) / ratio.maxCoeff() < 1e-12);
  CHECK(ratio.minCoeff() * d.clean.cwiseAbs().sum() == doctest::Approx(1e-4 * d.clean.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("per-entry data: gamma is the squared percentage of each entry") {
  ExperimentConfig c = tiny_darcy();
  c.noise_convention = NoiseConvention::PerEntryPercent;
  c.noise_percent = 2.0;
  const SyntheticData d = generate_data(c);
  for (Eigen::Index i = 0; i < d.clean.size(); ++i) {
    CHECK(d.obs.gamma_diag[i] == doctest::Approx(std::pow(0.02 * std::abs(d.clean[i]), 2)).epsilon(1e-14));
  }
}

TEST_CASE("zero noise and determinism") {
  ExperimentConfig c = tiny_darcy();
  c.noise_percent = 0.0;
  c.allow_zero_noise = true;
  const SyntheticData z = generate_data(c);
  CHECK(z.obs.y == z.clean);
  CHECK(z.obs.eta == 0.0);
  CHECK(z.obs.gamma_diag.minCoeff() > 0.0);

  const SyntheticData a = generate_data(tiny_darcy());
  const SyntheticData b = generate_data(tiny_darcy());
  CHECK(a.obs.y == b.obs.y);
  ExperimentConfig other = tiny_darcy();
  other.noise_seed = 8;
  CHECK(generate_data(other).obs.y != a.obs.y);
}

TEST_CASE("replicates: single seed, identical seeds, accounting") {
  const Experiment e = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(e);
  const RunOutcome one = run_single(e, d, 1);
  REQUIRE_FALSE(one.failed());

  const ReplicateResult single = run_replicated(e, d, {1});
  REQUIRE(single.mean_curve.size() == one.records.size());
  for (std::size_t n = 0; n < one.records.size(); ++n) {
    CHECK(single.mean_curve[n].misfit == one.records[n].misfit);
    CHECK(single.mean_curve[n].rel_error == one.records[n].rel_error);
    // Alpha trials cost no forward evaluations.
    CHECK(one.records[n].forward_evals == e.cfg.ne * long(n + 1));
  }

  const ReplicateResult twin = run_replicated(e, d, {4, 4});
  for (const auto& row : twin.mean_curve) {
    CHECK(row.count == 2);
    CHECK(row.misfit == twin.runs[0].records[std::size_t(row.n)].misfit);
  }
  CHECK_THROWS_AS(run_replicated(e, d, {}), std::invalid_argument);
}

TEST_CASE("replicates: failed runs are recorded and excluded") {
  Experiment e = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(e);
  e.model = std::make_shared<AlwaysFails>(64);
  const ReplicateResult r = run_replicated(e, d, {1, 2, 3});
  CHECK(r.failures == 3);
  CHECK(r.mean_curve.empty());
  for (const auto& run : r.runs) CHECK(run.error_message.find("member") != std::string::npos);
  CHECK_FALSE(r.all_converged());
  const fs::path dir = scratch("failed");
  CHECK_THROWS_AS(report(e, d, r, dir), std::invalid_argument);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("all run modes produce records") {
  const Experiment base = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(base);
  for (RunMode m : {RunMode::Unregularized, RunMode::Smoother, RunMode::Lm}) {
    Experiment e = base;
    e.cfg.mode = m;
    const RunOutcome r = run_single(e, d, 2);
    INFO(to_string(m));
    REQUIRE_FALSE(r.failed());
    CHECK(r.estimate.has_value());
    if (m == RunMode::Unregularized) CHECK(r.records.size() == std::size_t(e.cfg.unregularized_iters + 1));
    if (m == RunMode::Smoother) {
      REQUIRE(r.records.size() == 2);
      CHECK(r.records[1].forward_evals == 2 * e.cfg.ne);
    }
    if (m == RunMode::Lm) CHECK(r.records.front().jacobian_evals >= 0);
  }
}

TEST_CASE("level-set experiment reports misclassification") {
  const Experiment e = Experiment::build(tiny_facies());
  REQUIRE(e.truth_inside.has_value());
  CHECK(e.truth_reference.minCoeff() >= 1.0 - 1e-12);
  CHECK(e.truth_reference.maxCoeff() <= 10.0 + 1e-12);
  const RunOutcome r = run_single(e, generate_data(e), 3);
  REQUIRE_FALSE(r.failed());
  REQUIRE(r.misclassified_fraction.has_value());
  CHECK(*r.misclassified_fraction >= 0.0);
  CHECK(*r.misclassified_fraction <= 1.0);
}

TEST_CASE("sweep axes") {
  const ExperimentConfig c = tiny_darcy();
  const ExperimentConfig r = with_axis_value(c, SweepAxis::Rho, 0.5);
  CHECK(r.eki.rho == 0.5);
  CHECK(r.eki.tau - 1.0 / 0.5 == doctest::Approx(c.eki.tau - 1.0 / c.eki.rho));
  CHECK(with_axis_value(c, SweepAxis::M, 16).lattice == 4);
  CHECK_THROWS_AS(with_axis_value(c, SweepAxis::M, 15), std::invalid_argument);
  CHECK_THROWS_AS(with_axis_value(c, SweepAxis::Ne, 2.5), std::invalid_argument);
  CHECK(with_axis_value(c, SweepAxis::L, 3.0).prior_spec.a == 3.0);
  CHECK_THROWS_AS(with_axis_value(ExperimentConfig::desk_facies(), SweepAxis::L, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(with_axis_value(ExperimentConfig::desk_eit(), SweepAxis::M, 16), std::invalid_argument);

  const SweepTable t = sweep(c, SweepAxis::Ne, {12});
  const Experiment e = Experiment::build(c);
  const ReplicateResult direct = run_replicated(e, generate_data(e), c.seeds);
  REQUIRE(t.rows.size() == 1);
  REQUIRE(t.results[0].mean_curve.size() == direct.mean_curve.size());
  for (std::size_t n = 0; n < direct.mean_curve.size(); ++n) {
    CHECK(t.results[0].mean_curve[n].misfit == direct.mean_curve[n].misfit);
  }
  const SweepRow row = summarize(12, direct);
  CHECK(t.rows[0].mean_terminal_error == row.mean_terminal_error);
  CHECK(row.mean_forward_evals == doctest::Approx(c.ne * (row.mean_stop_iteration + 1)));
}

TEST_CASE("records CSV: one record gives header plus one row; round trip") {
  IterationRecord r;
  r.n = 0;
  r.alpha = 0.1 + 0.2;
  r.misfit = 1.0 / 3.0;
  r.mean_output_misfit = std::nan("");
  r.rel_error = 0.5;
  r.forward_evals = 7;
  std::ostringstream out;
  write_records_csv(out, {r});
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  std::istringstream in(text);
  const auto back = read_records_csv(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].alpha == r.alpha);
  CHECK(back[0].misfit == r.misfit);
  CHECK(std::isnan(back[0].mean_output_misfit));
  CHECK(back[0].forward_evals == 7);
  std::istringstream bad("n,alpha\n");
  CHECK_THROWS(read_records_csv(bad));
}

TEST_CASE("report: files, alpha staircase cross-check, byte-identical reruns") {
  const Experiment e = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(e);
  const ReplicateResult res = run_replicated(e, d, e.cfg.seeds);
  const fs::path a = scratch("report_a");
  const fs::path b = scratch("report_b");
  report(e, d, res, a);
  report(e, d, run_replicated(e, d, e.cfg.seeds), b);
  for (const char* f : {"records_seed1.csv", "records_seed2.csv", "mean_curve.csv", "summary.csv", "data.csv",
                        "alpha.csv", "manifest.json", "misfit.svg", "error.svg", "alpha.svg", "truth.fld",
                        "estimate_seed1.fld"}) {
    INFO(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string manifest = slurp(a / "manifest.json");
  CHECK(manifest.find(config_hash(e.cfg)) != std::string::npos);
  CHECK(manifest.find("assumed") != std::string::npos);

  // The plotted alpha series is exactly the accepted alphas of the records.
  std::ifstream alpha_in(a / "alpha.csv");
  std::string line;
  std::getline(alpha_in, line);
  CHECK(line == "seed,n,alpha");
  std::map<std::uint64_t, std::vector<double>> plotted;
  while (std::getline(alpha_in, line)) {
    std::stringstream s(line);
    std::string seed, n, alpha;
    std::getline(s, seed, ',');
    std::getline(s, n, ',');
    std::getline(s, alpha, ',');
    plotted[std::stoull(seed)].push_back(std::stod(alpha));
  }
  for (const auto& run : res.runs) {
    std::vector<double> accepted;
    for (const auto& r : run.records) {
      if (!r.stopped && std::isfinite(r.alpha)) accepted.push_back(r.alpha);
    }
    CHECK(!accepted.empty());
    CHECK(plotted[run.seed] == accepted);
  }

  const std::string before = slurp(a / "alpha.csv");
  fs::remove(a / "alpha.svg");
  report_from_directory(a);
  CHECK(slurp(a / "alpha.csv") == before);
  CHECK(fs::exists(a / "alpha.svg"));

  Field truth = read_field(a / "truth.fld");
  CHECK(truth.values() == e.truth.values());
}

TEST_CASE("report rejects empty input and unwritable targets") {
  const Experiment e = Experiment::build(tiny_darcy());
  const SyntheticData d = generate_data(e);
  const fs::path dir = scratch("empty");
  CHECK_THROWS_AS(report(e, d, ReplicateResult{}, dir), std::invalid_argument);
  CHECK_FALSE(fs::exists(dir));
  ReplicateResult hollow;
  hollow.runs.push_back(RunOutcome{});
  CHECK_THROWS_AS(report(e, d, hollow, dir), std::invalid_argument);
  CHECK_FALSE(fs::exists(dir));
  const fs::path file = scratch("plain_file");
  std::ofstream(file) << "x";
  CHECK_THROWS(report(e, d, run_replicated(e, d, {1}), file / "sub"));
  fs::remove(file);
}

TEST_CASE("binary fields round-trip on grids and meshes") {
  const fs::path dir = scratch("fields");
  fs::create_directories(dir);
  const Grid g(5, 3, -1.0, 2.0, 0.5, 4.0);
  Eigen::VectorXd v(15);
  for (int i = 0; i < 15; ++i) v[i] = std::sin(1.0 + i) * 1e3 + 1.0 / (i + 1);
  write_field(dir / "g.fld", Field(g, v));
  const Field back = read_field(dir / "g.fld");
  CHECK(std::get<Grid>(back.discretization()) == g);
  CHECK(back.values() == v);

  const MeshHandle mesh = std::make_shared<const TriMesh>(make_disk_mesh(disk_mesh_for_target(200)));
  const Eigen::VectorXd mv = Eigen::VectorXd::LinSpaced(mesh->element_count(), -2.0, 3.0);
  write_field(dir / "m.fld", Field(mesh, mv));
  CHECK_THROWS_AS(read_field(dir / "m.fld"), std::invalid_argument);
  CHECK(read_field(dir / "m.fld", mesh).values() == mv);
  const MeshHandle other = std::make_shared<const TriMesh>(make_disk_mesh(disk_mesh_for_target(400)));
  CHECK_THROWS_AS(read_field(dir / "m.fld", other), std::invalid_argument);

  std::ofstream(dir / "bad.fld") << "NOTAFIELD.......";
  CHECK_THROWS(read_field(dir / "bad.fld"));
  CHECK_THROWS(read_field(dir / "missing.fld"));
  fs::remove_all(dir);
}

TEST_CASE("svg charts") {
  SvgChart c{"a < b & c", "x", "y", true, {{"s", {0, 1, 2}, {1.0, 0.1, -1.0}}}, 0.5};
  const std::string svg = c.render();
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(SvgChart{}.render().find("</svg>") != std::string::npos);
}
