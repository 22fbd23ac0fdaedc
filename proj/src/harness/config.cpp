#include "reki/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reki {

namespace pt = boost::property_tree;

namespace {

template <class E>
struct Names {
  E value;
  const char* name;
};

constexpr Names<ModelKind> kModels[] = {{ModelKind::Darcy, "darcy"},
                                        {ModelKind::Eit, "eit"},
                                        {ModelKind::DarcyLevelSet, "darcy-levelset"},
                                        {ModelKind::EitLevelSet, "eit-levelset"}};
constexpr Names<RunMode> kModes[] = {{RunMode::Regularized, "regularized"},
                                     {RunMode::Unregularized, "unregularized"},
                                     {RunMode::Smoother, "smoother"},
                                     {RunMode::Lm, "lm"}};
constexpr Names<TruthKind> kTruths[] = {{TruthKind::Grf, "grf"}, {TruthKind::Shapes, "shapes"}};
constexpr Names<NoiseConvention> kNoise[] = {{NoiseConvention::GlobalPercent, "global-percent"},
                                             {NoiseConvention::PerEntryPercent, "per-entry-percent"}};
constexpr Names<LmBasis> kBases[] = {{LmBasis::Ensemble, "ensemble"}, {LmBasis::Kl, "kl"}};
constexpr Names<SweepAxis> kAxes[] = {{SweepAxis::Ne, "Ne"},
                                      {SweepAxis::Rho, "rho"},
                                      {SweepAxis::M, "M"},
                                      {SweepAxis::Noise, "noise"},
                                      {SweepAxis::L, "L"}};

template <class E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  throw std::logic_error("unnamed enum value");
}

template <class E, std::size_t N>
E value_of(const Names<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string known;
  for (const auto& e : table) known += std::string(known.empty() ? "" : ", ") + e.name;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "' (expected one of: " + known + ")");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw std::invalid_argument("config: '" + key + "' is not a number: '" + s + "'");
  return v;
}

std::string shapes_to_string(const std::vector<Shape>& shapes) {
  std::string out;
  for (const auto& s : shapes) {
    if (!out.empty()) out += "; ";
    if (s.kind == Shape::Kind::Disk) {
      out += "disk " + num(s.cx) + " " + num(s.cy) + " " + num(s.r);
    } else {
      out += "band " + num(s.y_lo) + " " + num(s.y_hi) + " " + num(s.slope);
    }
  }
  return out;
}

std::vector<Shape> shapes_from_string(const std::string& text) {
  std::vector<Shape> out;
  for (const auto& item : split(text, ';')) {
    const auto words = split(item, ' ');
    if (words.size() != 4) throw std::invalid_argument("config: shape '" + item + "' needs a kind and three numbers");
    const double a = to_double(words[1], "truth.shapes");
    const double b = to_double(words[2], "truth.shapes");
    const double c = to_double(words[3], "truth.shapes");
    if (words[0] == "disk") {
      out.push_back(Shape::disk(a, b, c));
    } else if (words[0] == "band") {
      out.push_back(Shape::band(a, b, c));
    } else {
      throw std::invalid_argument("config: unknown shape kind '" + words[0] + "'");
    }
  }
  return out;
}

void put_spec(pt::ptree& t, const std::string& section, const CovarianceSpec& s) {
  t.put(section + ".family", to_string(s.family));
  t.put(section + ".c0", num(s.c0));
  t.put(section + ".a", num(s.a));
  t.put(section + ".L", num(s.L));
  t.put(section + ".theta", num(s.theta));
  t.put(section + ".omega", num(s.omega));
}

class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}

  std::optional<std::string> str(const std::string& key) const {
    auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    used_.push_back(key);
    return *v;
  }
  void num(const std::string& key, double& out) const {
    if (auto v = str(key)) out = to_double(*v, key);
  }
  void integer(const std::string& key, int& out) const {
    if (auto v = str(key)) {
      const double d = to_double(*v, key);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw std::invalid_argument("config: '" + key + "' must be an integer");
      out = static_cast<int>(d);
    }
  }
  void u64(const std::string& key, std::uint64_t& out) const {
    if (auto v = str(key)) out = parse_u64(*v, key);
  }
  void flag(const std::string& key, bool& out) const {
    if (auto v = str(key)) {
      if (*v == "true" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "0") {
        out = false;
      } else {
        throw std::invalid_argument("config: '" + key + "' must be true or false");
      }
    }
  }
  void spec(const std::string& section, CovarianceSpec& s) const {
    if (auto v = str(section + ".family")) s.family = family_from_string(*v);
    num(section + ".c0", s.c0);
    num(section + ".a", s.a);
    num(section + ".L", s.L);
    num(section + ".theta", s.theta);
    num(section + ".omega", s.omega);
  }

  static std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument("config: '" + key + "' is not a seed: '" + s + "'");
    return v;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (const auto& [section, body] : t_) {
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (std::find(used_.begin(), used_.end(), full) == used_.end()) out.push_back(full);
      }
    }
    return out;
  }

 private:
  const pt::ptree& t_;
  mutable std::vector<std::string> used_;
};

}  // namespace

std::string to_string(ModelKind k) { return name_of(kModels, k); }
std::string to_string(RunMode m) { return name_of(kModes, m); }
std::string to_string(TruthKind k) { return name_of(kTruths, k); }
std::string to_string(NoiseConvention c) { return name_of(kNoise, c); }
std::string to_string(LmBasis b) { return name_of(kBases, b); }
std::string to_string(SweepAxis a) { return name_of(kAxes, a); }
ModelKind model_kind_from_string(const std::string& s) { return value_of(kModels, s, "model"); }
RunMode run_mode_from_string(const std::string& s) { return value_of(kModes, s, "mode"); }
SweepAxis sweep_axis_from_string(const std::string& s) { return value_of(kAxes, s, "sweep axis"); }

bool is_level_set(ModelKind k) { return k == ModelKind::DarcyLevelSet || k == ModelKind::EitLevelSet; }
bool is_eit(ModelKind k) { return k == ModelKind::Eit || k == ModelKind::EitLevelSet; }

ExperimentConfig ExperimentConfig::desk_darcy() { return {}; }

ExperimentConfig ExperimentConfig::desk_facies() {
  ExperimentConfig c;
  c.model = ModelKind::DarcyLevelSet;
  c.truth_kind = TruthKind::Shapes;
  // Two tilted high-conductivity layers covering about 45% of the aquifer.
  c.truth_shapes = {Shape::band(0.8, 2.6, 0.2), Shape::band(3.9, 4.9, -0.15)};
  c.conductivity = {10.0, 1.0};
  c.prior_spec = CovarianceSpec::laplacian_power(1.5, 1.0);
  return c;
}

ExperimentConfig ExperimentConfig::desk_eit() {
  ExperimentConfig c;
  c.model = ModelKind::Eit;
  c.truth_kind = TruthKind::Shapes;
  c.truth_shapes = {Shape::disk(-0.4, 0.35, 0.25), Shape::disk(0.4, 0.3, 0.2), Shape::disk(0.05, -0.45, 0.22)};
  c.conductivity = {4.0, 1.0};
  c.noise_convention = NoiseConvention::PerEntryPercent;
  c.noise_percent = 2.0;
  c.prior_spec = CovarianceSpec::whittle_matern(0.2, 5.0, 0.1);
  c.truth_spec = c.prior_spec;
  c.ne = 100;
  return c;
}

ExperimentConfig ExperimentConfig::desk_eit_level_set() {
  ExperimentConfig c = desk_eit();
  c.model = ModelKind::EitLevelSet;
  c.conductivity = {10.0, 1.0};
  c.prior_spec = CovarianceSpec::whittle_matern(0.1, 5.0, 0.1);
  c.ne = 200;
  return c;
}

void ExperimentConfig::validate() const {
  truth_spec.validate();
  prior_spec.validate();
  conductivity.validate();
  eki.validate();
  if (truth_kind == TruthKind::Shapes && truth_shapes.empty()) throw std::invalid_argument("config: shape truth without shapes");
  if (is_level_set(model) && truth_kind != TruthKind::Shapes) {
    throw std::invalid_argument("config: level-set models need a shape truth");
  }
  if (is_eit(model)) {
    if (eit_inversion_elements < 16) throw std::invalid_argument("config: EIT inversion mesh too small");
    if (eit_truth_elements <= eit_inversion_elements) {
      throw std::invalid_argument("config: the truth mesh must be finer than the inversion mesh");
    }
    if (!(contact_impedance > 0)) throw std::invalid_argument("config: contact impedance must be positive");
  } else {
    if (inversion_grid < 2) throw std::invalid_argument("config: inversion grid too small");
    if (truth_grid <= inversion_grid) throw std::invalid_argument("config: the truth grid must be finer than the inversion grid");
    if (lattice < 1) throw std::invalid_argument("config: lattice must be positive");
  }
  if (kl_grid < 2) throw std::invalid_argument("config: KL grid too small");
  if (!(noise_percent >= 0) || !std::isfinite(noise_percent)) throw std::invalid_argument("config: noise_percent must be >= 0");
  if (noise_percent == 0 && !allow_zero_noise) {
    throw std::invalid_argument("config: noise_percent = 0 requires allow_zero_noise = true");
  }
  if (!(gamma_floor > 0 && gamma_floor < 1)) throw std::invalid_argument("config: gamma_floor must lie in (0, 1)");
  if (ne < 2) throw std::invalid_argument("config: ensemble size must be at least 2");
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed required");
  if (unregularized_iters < 0) throw std::invalid_argument("config: unregularized iterations must be >= 0");
  if (lm_modes < 1) throw std::invalid_argument("config: lm modes must be positive");
  if (!(fd_step > 0)) throw std::invalid_argument("config: fd_step must be positive");
  if (prior_truncation.count && *prior_truncation.count < 1) throw std::invalid_argument("config: truncation modes must be positive");
  if (!(prior_truncation.trace_fraction > 0 && prior_truncation.trace_fraction <= 1)) {
    throw std::invalid_argument("config: truncation fraction must lie in (0, 1]");
  }
}

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree t;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const Reader r(t);
  ExperimentConfig c;
  if (auto m = r.str("experiment.model")) {
    switch (model_kind_from_string(*m)) {
      case ModelKind::Darcy: c = ExperimentConfig::desk_darcy(); break;
      case ModelKind::DarcyLevelSet: c = ExperimentConfig::desk_facies(); break;
      case ModelKind::Eit: c = ExperimentConfig::desk_eit(); break;
      case ModelKind::EitLevelSet: c = ExperimentConfig::desk_eit_level_set(); break;
    }
  }
  if (auto v = r.str("experiment.mode")) c.mode = run_mode_from_string(*v);

  if (auto v = r.str("truth.kind")) c.truth_kind = value_of(kTruths, *v, "truth kind");
  r.spec("truth", c.truth_spec);
  r.u64("truth.seed", c.truth_seed);
  if (auto v = r.str("truth.shapes")) c.truth_shapes = shapes_from_string(*v);
  r.num("conductivity.kappa_inside", c.conductivity.kappa_inside);
  r.num("conductivity.kappa_outside", c.conductivity.kappa_outside);

  r.integer("grids.truth", c.truth_grid);
  r.integer("grids.inversion", c.inversion_grid);
  r.integer("grids.kl", c.kl_grid);
  r.integer("grids.eit_truth_elements", c.eit_truth_elements);
  r.integer("grids.eit_inversion_elements", c.eit_inversion_elements);
  r.num("grids.contact_impedance", c.contact_impedance);

  r.integer("data.lattice", c.lattice);
  if (auto v = r.str("data.noise_convention")) c.noise_convention = value_of(kNoise, *v, "noise convention");
  r.num("data.noise_percent", c.noise_percent);
  r.flag("data.allow_zero_noise", c.allow_zero_noise);
  r.u64("data.noise_seed", c.noise_seed);
  r.num("data.gamma_floor", c.gamma_floor);

  r.integer("ensemble.size", c.ne);
  r.spec("ensemble", c.prior_spec);
  int modes = c.prior_truncation.count ? static_cast<int>(*c.prior_truncation.count) : 0;
  r.integer("ensemble.truncation_modes", modes);
  c.prior_truncation.count = modes > 0 ? std::optional<Eigen::Index>(modes) : std::nullopt;
  r.num("ensemble.truncation_fraction", c.prior_truncation.trace_fraction);
  if (auto v = r.str("ensemble.seeds")) {
    c.seeds.clear();
    for (const auto& s : split(*v, ',')) c.seeds.push_back(Reader::parse_u64(s, "ensemble.seeds"));
  }

  r.num("eki.rho", c.eki.rho);
  r.num("eki.tau", c.eki.tau);
  r.num("eki.alpha0", c.eki.alpha0_init);
  r.num("eki.alpha_floor", c.eki.alpha_floor);
  r.integer("eki.max_iters", c.eki.max_iters);
  r.integer("eki.max_alpha_doublings", c.eki.max_alpha_doublings);
  r.integer("unregularized.iters", c.unregularized_iters);
  if (auto v = r.str("lm.basis")) c.lm_basis = value_of(kBases, *v, "lm basis");
  r.integer("lm.modes", c.lm_modes);
  r.num("lm.fd_step", c.fd_step);
  r.flag("output.log_estimate_misfit", c.log_estimate_misfit);

  const auto unknown = r.unknown();
  if (!unknown.empty()) throw std::invalid_argument("config: unknown key '" + unknown.front() + "'");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  pt::ptree t;
  t.put("experiment.model", to_string(c.model));
  t.put("experiment.mode", to_string(c.mode));
  t.put("truth.kind", to_string(c.truth_kind));
  put_spec(t, "truth", c.truth_spec);
  t.put("truth.seed", std::to_string(c.truth_seed));
  t.put("truth.shapes", shapes_to_string(c.truth_shapes));
  t.put("conductivity.kappa_inside", num(c.conductivity.kappa_inside));
  t.put("conductivity.kappa_outside", num(c.conductivity.kappa_outside));
  t.put("grids.truth", c.truth_grid);
  t.put("grids.inversion", c.inversion_grid);
  t.put("grids.kl", c.kl_grid);
  t.put("grids.eit_truth_elements", c.eit_truth_elements);
  t.put("grids.eit_inversion_elements", c.eit_inversion_elements);
  t.put("grids.contact_impedance", num(c.contact_impedance));
  t.put("data.lattice", c.lattice);
  t.put("data.noise_convention", to_string(c.noise_convention));
  t.put("data.noise_percent", num(c.noise_percent));
  t.put("data.allow_zero_noise", c.allow_zero_noise ? "true" : "false");
  t.put("data.noise_seed", std::to_string(c.noise_seed));
  t.put("data.gamma_floor", num(c.gamma_floor));
  t.put("ensemble.size", c.ne);
  put_spec(t, "ensemble", c.prior_spec);
  t.put("ensemble.truncation_modes", c.prior_truncation.count ? *c.prior_truncation.count : 0);
  t.put("ensemble.truncation_fraction", num(c.prior_truncation.trace_fraction));
  std::string seeds;
  for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  t.put("ensemble.seeds", seeds);
  t.put("eki.rho", num(c.eki.rho));
  t.put("eki.tau", num(c.eki.tau));
  t.put("eki.alpha0", num(c.eki.alpha0_init));
  t.put("eki.alpha_floor", num(c.eki.alpha_floor));
  t.put("eki.max_iters", c.eki.max_iters);
  t.put("eki.max_alpha_doublings", c.eki.max_alpha_doublings);
  t.put("unregularized.iters", c.unregularized_iters);
  t.put("lm.basis", to_string(c.lm_basis));
  t.put("lm.modes", c.lm_modes);
  t.put("lm.fd_step", num(c.fd_step));
  t.put("output.log_estimate_misfit", c.log_estimate_misfit ? "true" : "false");
  std::ostringstream out;
  pt::write_ini(out, t);
  return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_ini(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string git_commit() { return REKI_GIT_COMMIT; }

}  // namespace reki
