#include "adaprox/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "adaprox/data.hpp"
#include "adaprox/errors.hpp"

namespace adaprox {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Attribute level counts of a 112-column one-hot layout (22 raw attributes,
// one of them constant and dropped).
const std::vector<int> kOneHotLevels = {6, 4, 10, 2, 9, 2, 2, 2, 12, 2, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 7};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<double> number_list(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return {fallback};
  const json& v = j.at(key);
  try {
    if (v.is_array()) {
      if (v.empty()) throw ConfigError(std::string("config key '") + key + "': empty list");
      return v.get<std::vector<double>>();
    }
    return {v.get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<ControllerConfig> parse_controllers(const json& list) {
  if (!list.is_array()) throw ConfigError("config key 'controllers': expected a list");
  std::vector<ControllerConfig> out;
  for (const json& entry : list) {
    if (!entry.is_object() || !entry.contains("type")) {
      throw ConfigError("config key 'controllers': every entry needs a 'type'");
    }
    const auto type = entry.at("type").get<std::string>();
    std::optional<std::size_t> cap;
    if (entry.contains("cap") && !entry.at("cap").is_null()) cap = entry.at("cap").get<std::size_t>();
    auto push = [&](auto kind) {
      ControllerConfig c;
      c.kind = kind;
      c.cap = cap;
      try {
        c.validate();
      } catch (const ArgumentError& e) {
        throw ConfigError(std::string("controller '") + type + "': " + e.what());
      }
      out.push_back(c);
    };
    if (type == "norm") {
      for (double eta : number_list(entry, "eta", 0.9)) push(control::Norm{eta});
    } else if (type == "ip" || type == "inner_product") {
      if (entry.contains("eta") && !entry.contains("beta")) {
        for (double eta : number_list(entry, "eta", 0.9)) push(control::InnerProduct{beta_from_eta(eta)});
      } else {
        for (double beta : number_list(entry, "beta", 0.9)) push(control::InnerProduct{beta});
      }
    } else if (type == "geometric") {
      const auto s0 = get_or<std::size_t>(entry, "initial", 2);
      for (double gamma : number_list(entry, "gamma", 0.1)) push(control::Geometric{s0, gamma});
    } else if (type == "oracle") {
      for (double eta : number_list(entry, "eta", 0.5)) push(control::OracleNorm{eta});
    } else {
      throw ConfigError("unknown controller type '" + type + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key 'controllers': empty list");
  return out;
}

json controller_json(const ControllerConfig& c) {
  json j;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, control::Norm>) {
          j = {{"type", "norm"}, {"eta", k.eta}};
        } else if constexpr (std::is_same_v<K, control::InnerProduct>) {
          j = {{"type", "ip"}, {"beta", k.beta}};
        } else if constexpr (std::is_same_v<K, control::Geometric>) {
          j = {{"type", "geometric"}, {"gamma", k.gamma}, {"initial", k.initial}};
        } else {
          j = {{"type", "oracle"}, {"eta", k.eta}};
        }
      },
      c.kind);
  j["cap"] = c.cap ? json(*c.cap) : json(nullptr);
  return j;
}

std::string fnv_hex(const std::string& s) { return checksum_bytes(s); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ProxFunction build_regularizer(const json& spec, const StochasticProblem& p) {
  const Index d = p.dimension();
  if (spec.is_string() && spec.get<std::string>() == "default") {
    if (const auto* logistic = dynamic_cast<const LogisticL1*>(&p)) return logistic->regularizer();
    return ProxFunction::zero(d);
  }
  const std::string type = spec.is_string() ? spec.get<std::string>() : get_or<std::string>(spec, "type", "");
  if (type == "zero") return ProxFunction::zero(d);
  if (type == "nonneg") return ProxFunction::nonneg(d);
  if (type == "l1") {
    double weight = 0.0;
    if (const auto* logistic = dynamic_cast<const LogisticL1*>(&p)) weight = logistic->lambda();
    return ProxFunction::l1(d, get_or<double>(spec, "weight", weight));
  }
  if (type == "box") {
    const double lo = get_or<double>(spec, "lo", -1.0);
    const double hi = get_or<double>(spec, "hi", 1.0);
    return ProxFunction::box(Vector::Constant(d, lo), Vector::Constant(d, hi));
  }
  throw ConfigError("unknown regularizer '" + type + "'");
}

// Nearest feasible point to the origin for the start iterate.
Vector start_point(const ProxFunction& h, Index d) {
  Vector x0 = Vector::Zero(d);
  if (!std::isfinite(h.evaluate(x0))) x0 = h.prox(1.0, x0);
  return x0;
}

void write_trace(const fs::path& path, const std::vector<RunRecord>& trace, double n) {
  std::ostringstream os;
  os << "k,S_k,batch_fraction,cum_samples,eff_grad_evals,phi_gap,step_norm_over_alpha,resampled,wall_ms\n";
  for (const RunRecord& r : trace) {
    os << r.iteration << ',' << r.batch_size << ',' << fmt(static_cast<double>(r.batch_size) / n) << ','
       << r.cumulative_samples << ',' << fmt(r.effective_gradient_evaluations) << ',' << fmt(r.phi_gap) << ','
       << fmt(r.step_norm_over_alpha) << ',' << (r.resampled ? 1 : 0) << ',' << fmt(r.wall_ms) << '\n';
  }
  write_text(path, os.str());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  }
  return t;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<double> alpha_values(const ExperimentConfig& cfg, const StochasticProblem& p) {
  switch (cfg.step_mode) {
    case ExperimentConfig::StepMode::kGrid:
    case ExperimentConfig::StepMode::kFixed:
      return cfg.alpha_grid;
    case ExperimentConfig::StepMode::kTheory: {
      SolverConfig s;
      s.alpha = TheoryStep{cfg.theory_eta};
      return {resolve_alpha(s, p)};
    }
  }
  return {};
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int e = -10; e <= 15; e += 3) grid.push_back(std::ldexp(1.0, e));
  grid.push_back(std::ldexp(1.0, 15));
  return grid;
}

std::vector<std::uint64_t> default_seeds(std::size_t n) {
  std::uint64_t base = 1;
  if (const char* env = std::getenv("ADAPROX_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') base = v;
  }
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(base + i);
  return seeds;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  if (!j.contains("problem") || !j.at("problem").is_object()) throw ConfigError("config key 'problem' is required");
  cfg.problem = j.at("problem");
  const auto type = get_or<std::string>(cfg.problem, "type", "");
  if (type != "logistic" && type != "synthetic_onehot" && type != "quadratic") {
    throw ConfigError("problem.type must be logistic, synthetic_onehot or quadratic");
  }
  if (type == "logistic" && !cfg.problem.contains("path")) throw ConfigError("problem.path is required");
  if (j.contains("regularizer")) cfg.regularizer = j.at("regularizer");

  if (j.contains("controllers")) {
    cfg.controllers = parse_controllers(j.at("controllers"));
  } else {
    cfg.controllers = parse_controllers(json::parse(
        R"([{"type":"norm","eta":0.9},{"type":"ip","beta":0.9},{"type":"geometric","gamma":0.1}])"));
  }

  cfg.alpha_grid = default_alpha_grid();
  if (j.contains("steplength")) {
    const json& s = j.at("steplength");
    const auto mode = get_or<std::string>(s, "mode", "grid");
    if (mode == "grid") {
      cfg.step_mode = ExperimentConfig::StepMode::kGrid;
      if (s.contains("grid")) cfg.alpha_grid = number_list(s, "grid", 1.0);
    } else if (mode == "theory") {
      cfg.step_mode = ExperimentConfig::StepMode::kTheory;
      cfg.theory_eta = get_or<double>(s, "eta", 0.5);
      if (!(cfg.theory_eta > 0.0 && cfg.theory_eta < 1.0)) throw ConfigError("steplength.eta must lie in (0,1)");
    } else if (mode == "fixed") {
      cfg.step_mode = ExperimentConfig::StepMode::kFixed;
      cfg.alpha_grid = number_list(s, "alpha", 1.0);
    } else {
      throw ConfigError("steplength.mode must be grid, theory or fixed");
    }
    for (double a : cfg.alpha_grid) {
      if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("steplengths must be positive and finite");
    }
  }

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (s.is_number_unsigned()) {
      cfg.seeds = default_seeds(s.get<std::size_t>());
    } else if (s.is_array() && !s.empty()) {
      cfg.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      throw ConfigError("config key 'seeds': expected a count or a non-empty list");
    }
  } else {
    cfg.seeds = default_seeds();
  }

  cfg.max_epochs = get_or<double>(j, "max_epochs", cfg.max_epochs);
  cfg.step_tolerance = get_or<double>(j, "step_tolerance", cfg.step_tolerance);
  cfg.initial_batch = get_or<std::size_t>(j, "initial_batch", cfg.initial_batch);
  cfg.record_every = get_or<std::size_t>(j, "record_every", cfg.record_every);
  cfg.record_every_epochs = get_or<double>(j, "record_every_epochs", cfg.record_every_epochs);
  if (j.contains("max_iterations") && !j.at("max_iterations").is_null()) {
    cfg.max_iterations = get_or<std::size_t>(j, "max_iterations", 0);
  }
  const auto sampling = get_or<std::string>(j, "sampling", "with_replacement");
  if (sampling == "with_replacement") {
    cfg.sampling = SamplingMode::kWithReplacement;
  } else if (sampling == "without_replacement") {
    cfg.sampling = SamplingMode::kWithoutReplacement;
  } else {
    throw ConfigError("sampling must be with_replacement or without_replacement");
  }
  cfg.resample_all = get_or<bool>(j, "resample_all", cfg.resample_all);
  cfg.timing = get_or<bool>(j, "timing", cfg.timing);
  cfg.jobs = get_or<unsigned>(j, "jobs", cfg.jobs);
  cfg.output = get_or<std::string>(j, "output", cfg.output.string());
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    cfg.reference_iterations = get_or<std::size_t>(r, "iterations", cfg.reference_iterations);
    if (r.contains("alpha") && !r.at("alpha").is_null()) cfg.reference_alpha = r.at("alpha").get<double>();
  }

  if (!(cfg.max_epochs > 0.0)) throw ConfigError("max_epochs must be positive");
  if (cfg.step_tolerance < 0.0) throw ConfigError("step_tolerance must be >= 0");
  if (cfg.initial_batch < 2) throw ConfigError("initial_batch must be >= 2");
  if (cfg.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.reference_alpha && !(*cfg.reference_alpha > 0.0)) throw ConfigError("reference.alpha must be positive");
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_json(path)); }

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = cfg.problem;
  j["regularizer"] = cfg.regularizer;
  j["controllers"] = json::array();
  for (const auto& c : cfg.controllers) j["controllers"].push_back(controller_json(c));
  switch (cfg.step_mode) {
    case ExperimentConfig::StepMode::kGrid: j["steplength"] = {{"mode", "grid"}, {"grid", cfg.alpha_grid}}; break;
    case ExperimentConfig::StepMode::kTheory: j["steplength"] = {{"mode", "theory"}, {"eta", cfg.theory_eta}}; break;
    case ExperimentConfig::StepMode::kFixed: j["steplength"] = {{"mode", "fixed"}, {"alpha", cfg.alpha_grid}}; break;
  }
  j["seeds"] = cfg.seeds;
  j["max_epochs"] = cfg.max_epochs;
  j["step_tolerance"] = cfg.step_tolerance;
  j["initial_batch"] = cfg.initial_batch;
  j["record_every"] = cfg.record_every;
  j["record_every_epochs"] = cfg.record_every_epochs;
  j["max_iterations"] = cfg.max_iterations ? json(*cfg.max_iterations) : json(nullptr);
  j["sampling"] = cfg.sampling == SamplingMode::kWithReplacement ? "with_replacement" : "without_replacement";
  j["resample_all"] = cfg.resample_all;
  j["timing"] = cfg.timing;
  j["jobs"] = cfg.jobs;
  j["output"] = cfg.output.string();
  j["reference"] = {{"iterations", cfg.reference_iterations},
                    {"alpha", cfg.reference_alpha ? json(*cfg.reference_alpha) : json(nullptr)}};
  return j;
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
  if (o.controller) {
    json entry = {{"type", *o.controller}};
    if (o.eta) entry["eta"] = *o.eta;
    if (o.beta) entry["beta"] = *o.beta;
    if (o.gamma) entry["gamma"] = *o.gamma;
    cfg.controllers = parse_controllers(json::array({entry}));
  } else if (o.eta || o.beta || o.gamma) {
    for (auto& c : cfg.controllers) {
      std::visit(
          [&](auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, control::Norm> || std::is_same_v<K, control::OracleNorm>) {
              if (o.eta) k.eta = *o.eta;
            } else if constexpr (std::is_same_v<K, control::InnerProduct>) {
              if (o.beta) k.beta = *o.beta;
            } else {
              if (o.gamma) k.gamma = *o.gamma;
            }
          },
          c.kind);
      try {
        c.validate();
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
      }
    }
    // Duplicate cells after overriding a swept parameter collapse into one.
    std::vector<ControllerConfig> unique;
    for (const auto& c : cfg.controllers) {
      const bool seen = std::any_of(unique.begin(), unique.end(),
                                    [&](const ControllerConfig& u) { return u.label() == c.label(); });
      if (!seen) unique.push_back(c);
    }
    cfg.controllers = std::move(unique);
  }
  if (o.alpha) {
    if (!(*o.alpha > 0.0)) throw ConfigError("--alpha must be positive");
    cfg.step_mode = ExperimentConfig::StepMode::kFixed;
    cfg.alpha_grid = {*o.alpha};
  }
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.max_epochs) {
    if (!(*o.max_epochs > 0.0)) throw ConfigError("--max-epochs must be positive");
    cfg.max_epochs = *o.max_epochs;
  }
  if (o.out) cfg.output = *o.out;
  if (o.jobs) {
    if (*o.jobs < 1) throw ConfigError("--jobs must be >= 1");
    cfg.jobs = *o.jobs;
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  j.erase("jobs");
  return fnv_hex(j.dump());
}

std::string reference_hash(const ExperimentConfig& cfg) {
  const json j = {{"problem", cfg.problem},
                  {"regularizer", cfg.regularizer},
                  {"iterations", cfg.reference_iterations},
                  {"alpha", cfg.reference_alpha ? json(*cfg.reference_alpha) : json(nullptr)}};
  return fnv_hex(j.dump());
}

BuiltProblem build_problem(const ExperimentConfig& cfg) {
  const json& spec = cfg.problem;
  const auto type = get_or<std::string>(spec, "type", "");
  BuiltProblem out;
  if (type == "quadratic") {
    const auto d = get_or<Index>(spec, "dimension", 10);
    const auto pool = get_or<std::size_t>(spec, "pool_size", static_cast<std::size_t>(10 * d));
    out.problem = std::make_shared<StochasticQuadratic>(
        StochasticQuadratic::random(d, get_or<double>(spec, "mu", 0.1), get_or<double>(spec, "L", 1.0),
                                    get_or<double>(spec, "sigma", 1.0), pool, get_or<std::uint64_t>(spec, "seed", 1)));
  } else {
    Dataset ds;
    if (type == "logistic") {
      const auto labels = get_or<std::string>(spec, "labels", "binary");
      if (labels != "binary" && labels != "digits") throw ConfigError("problem.labels must be binary or digits");
      std::optional<Index> dim;
      if (spec.contains("dimension")) dim = spec.at("dimension").get<Index>();
      ds = read_libsvm(spec.at("path").get<std::string>(), dim,
                       labels == "digits" ? LabelScheme::kDigits : LabelScheme::kBinary);
    } else if (type == "synthetic_onehot") {
      const auto levels = spec.contains("levels") ? spec.at("levels").get<std::vector<int>>() : kOneHotLevels;
      ds = synthetic_onehot(get_or<std::size_t>(spec, "rows", 8124), levels, get_or<std::uint64_t>(spec, "seed", 7),
                            get_or<double>(spec, "label_noise", 0.05));
    } else {
      throw ConfigError("problem.type must be logistic, synthetic_onehot or quadratic");
    }
    if (spec.contains("subsample")) {
      const json& sub = spec.at("subsample");
      const auto rows = get_or<std::size_t>(sub, "rows", 20000);
      if (rows < static_cast<std::size_t>(ds.rows())) ds = subsample(ds, rows, get_or<std::uint64_t>(sub, "seed", 1));
    }
    const auto scaling = get_or<std::string>(spec, "scaling", "none");
    if (scaling == "maxabs") {
      ds = scale_features(ds, FeatureScaling::kMaxAbsPerColumn);
    } else if (scaling != "none") {
      throw ConfigError("problem.scaling must be none or maxabs");
    }
    std::optional<double> lambda;
    if (spec.contains("lambda") && !spec.at("lambda").is_null()) lambda = spec.at("lambda").get<double>();
    out.problem = std::make_shared<LogisticL1>(std::make_shared<const Dataset>(std::move(ds)), lambda);
  }
  out.h = build_regularizer(cfg.regularizer, *out.problem);
  out.x0 = start_point(out.h, out.problem->dimension());
  out.description = out.problem->describe() + ", h = " + out.h.name();
  return out;
}

ReferenceRecord compute_reference(const ExperimentConfig& cfg) { return compute_reference(cfg, build_problem(cfg)); }

ReferenceRecord compute_reference(const ExperimentConfig& cfg, const BuiltProblem& built) {
  const fs::path file = cfg.output / "reference.json";
  const std::string hash = reference_hash(cfg);
  if (fs::exists(file)) {
    const json cached = read_json(file);
    if (cached.value("hash", "") == hash) {
      ReferenceRecord r;
      r.phi_star = cached.at("phi_star").get<double>();
      r.x_norm = cached.at("x_norm").get<double>();
      r.alpha = cached.at("alpha").get<double>();
      r.iterations = cached.at("iterations").get<std::size_t>();
      r.hash = hash;
      r.cached = true;
      return r;
    }
  }
  double alpha = 0.0;
  if (cfg.reference_alpha) {
    alpha = *cfg.reference_alpha;
  } else {
    const auto lip = built.problem->lipschitz();
    if (!lip || !(*lip > 0.0)) throw ConfigError("reference.alpha is required when L is unknown");
    alpha = 1.0 / *lip;
  }
  // DivergenceError propagates; its message already suggests a smaller alpha.
  const ReferenceSolution sol = reference_solution(*built.problem, built.h, alpha, cfg.reference_iterations, built.x0);
  ReferenceRecord r;
  r.phi_star = sol.phi_star;
  r.x_norm = sol.x.norm();
  r.alpha = alpha;
  r.iterations = sol.iterations;
  r.hash = hash;
  fs::create_directories(cfg.output);
  const json j = {{"hash", hash},       {"phi_star", r.phi_star},     {"x_norm", r.x_norm},
                  {"alpha", r.alpha},   {"iterations", r.iterations}, {"problem", built.description}};
  write_text(file, j.dump(2) + "\n");
  return r;
}

std::string cell_name(const ControllerConfig& c, double alpha, std::uint64_t seed) {
  std::string param = std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, control::InnerProduct>) {
          return "beta" + short_fmt(k.beta);
        } else if constexpr (std::is_same_v<K, control::Geometric>) {
          return "gamma" + short_fmt(k.gamma);
        } else {
          return "eta" + short_fmt(k.eta);
        }
      },
      c.kind);
  std::string method = c.method();
  std::transform(method.begin(), method.end(), method.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return method + "_" + param + "_alpha" + short_fmt(alpha) + "_seed" + std::to_string(seed);
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec || !fs::is_directory(cfg.output)) throw IoError("cannot create output directory " + cfg.output.string());

  const BuiltProblem built = build_problem(cfg);
  ExperimentSummary summary;
  summary.directory = cfg.output;

  json resolved = to_json(cfg);
  resolved["config_hash"] = config_hash(cfg);
  write_text(cfg.output / "config.json", resolved.dump(2) + "\n");

  summary.reference = compute_reference(cfg, built);
  const std::vector<double> alphas = alpha_values(cfg, *built.problem);
  const double n = static_cast<double>(built.problem->epoch_size());

  struct Job {
    std::size_t controller;
    double alpha;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cfg.controllers.size(); ++c) {
    for (double a : alphas) {
      for (std::uint64_t s : cfg.seeds) jobs.push_back({c, a, s});
    }
  }
  summary.cells.resize(jobs.size());

  auto run_cell = [&](std::size_t i) {
    const Job& job = jobs[i];
    const ControllerConfig& ctrl = cfg.controllers[job.controller];
    CellResult& cell = summary.cells[i];
    cell.cell = cell_name(ctrl, job.alpha, job.seed);
    cell.series_label = ctrl.label();
    cell.method = ctrl.method();
    cell.alpha = job.alpha;
    cell.seed = job.seed;
    cell.trace_file = cfg.output / ("trace_" + cell.cell + ".csv");
    SolverConfig s;
    s.alpha = job.alpha;
    s.max_epochs = cfg.max_epochs;
    s.max_iterations = cfg.max_iterations;
    s.step_tolerance = cfg.step_tolerance;
    s.controller = ctrl;
    s.seed = job.seed;
    s.record_every = cfg.record_every;
    s.record_every_epochs = cfg.record_every_epochs;
    s.initial_batch = cfg.initial_batch;
    s.sampling = cfg.sampling;
    s.resample_all = cfg.resample_all;
    s.phi_star = summary.reference.phi_star;
    s.timing = cfg.timing;
    try {
      SolveResult run = solve(*built.problem, built.h, s, built.x0);
      write_trace(cell.trace_file, run.trace, n);
      const RunRecord& last = run.trace.back();
      cell.final_gap = std::isfinite(last.phi_gap) ? last.phi_gap : std::numeric_limits<double>::infinity();
      cell.final_effective_evaluations = last.effective_gradient_evaluations;
      cell.cumulative_samples = last.cumulative_samples;
      cell.termination = to_string(run.reason);
      if (cfg.keep_traces) cell.trace = std::move(run.trace);
    } catch (const NumericalError& e) {
      cell.error = e.what();
      cell.numerical_failure = true;
    } catch (const Error& e) {
      cell.error = e.what();
    }
    if (!cell.error.empty()) {
      cell.final_gap = std::numeric_limits<double>::infinity();
      fs::remove(cell.trace_file, ec);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_cell(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Best alpha per controller: smallest seed-mean final gap, then fewer evaluations.
  for (std::size_t c = 0; c < cfg.controllers.size(); ++c) {
    BestRun best;
    best.series_label = cfg.controllers[c].label();
    best.method = cfg.controllers[c].method();
    best.mean_final_gap = std::numeric_limits<double>::infinity();
    best.mean_effective_evaluations = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double a : alphas) {
      double gap = 0.0;
      double evals = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].controller != c || jobs[i].alpha != a) continue;
        gap += summary.cells[i].final_gap;
        evals += summary.cells[i].final_effective_evaluations;
        ++count;
      }
      gap /= static_cast<double>(count);
      evals /= static_cast<double>(count);
      if (!std::isfinite(gap)) continue;
      if (!found || gap < best.mean_final_gap ||
          (gap == best.mean_final_gap && evals < best.mean_effective_evaluations)) {
        best.alpha = a;
        best.mean_final_gap = gap;
        best.mean_effective_evaluations = evals;
        found = true;
      }
    }
    if (!found) best.alpha = std::numeric_limits<double>::quiet_NaN();
    summary.best.push_back(best);
  }
  for (const CellResult& cell : summary.cells) summary.numerical_failure |= cell.numerical_failure;

  // Single-threaded outputs.
  json j;
  j["config_hash"] = config_hash(cfg);
  j["reference"] = {{"phi_star", summary.reference.phi_star},
                    {"x_norm", summary.reference.x_norm},
                    {"alpha", summary.reference.alpha},
                    {"iterations", summary.reference.iterations},
                    {"hash", summary.reference.hash}};
  j["epoch_size"] = built.problem->epoch_size();
  j["cells"] = json::array();
  for (const CellResult& cell : summary.cells) {
    j["cells"].push_back({{"cell", cell.cell},
                          {"series_label", cell.series_label},
                          {"method", cell.method},
                          {"alpha", cell.alpha},
                          {"seed", cell.seed},
                          {"trace_file", cell.trace_file.filename().string()},
                          {"final_gap", std::isfinite(cell.final_gap) ? json(cell.final_gap) : json(nullptr)},
                          {"eff_grad_evals", cell.final_effective_evaluations},
                          {"cum_samples", cell.cumulative_samples},
                          {"termination", cell.termination},
                          {"error", cell.error.empty() ? json(nullptr) : json(cell.error)}});
  }
  j["best"] = json::array();
  for (const BestRun& b : summary.best) {
    j["best"].push_back({{"series_label", b.series_label},
                         {"method", b.method},
                         {"alpha", std::isfinite(b.alpha) ? json(b.alpha) : json(nullptr)},
                         {"mean_final_gap", std::isfinite(b.mean_final_gap) ? json(b.mean_final_gap) : json(nullptr)},
                         {"mean_eff_grad_evals", std::isfinite(b.mean_effective_evaluations)
                                                     ? json(b.mean_effective_evaluations)
                                                     : json(nullptr)}});
  }
  j["selection_rule"] = "argmin seed-mean final phi_gap; ties by fewer effective gradient evaluations";
  write_text(cfg.output / "summary.json", j.dump(2) + "\n");

  std::ostringstream best_csv;
  best_csv << "series_label,alpha,seed,k,eff_grad_evals,phi_gap,batch_fraction\n";
  for (const BestRun& b : summary.best) {
    if (!std::isfinite(b.alpha)) continue;
    for (const CellResult& cell : summary.cells) {
      if (cell.series_label != b.series_label || cell.alpha != b.alpha || !cell.error.empty()) continue;
      const CsvTable t = read_csv(cell.trace_file);
      const auto ck = t.column("k"), ce = t.column("eff_grad_evals"), cg = t.column("phi_gap"),
                 cb = t.column("batch_fraction");
      for (const auto& row : t.rows) {
        best_csv << csv_quote(b.series_label) << ',' << fmt(b.alpha) << ',' << cell.seed << ',' << row[ck] << ','
                 << row[ce] << ',' << row[cg] << ',' << row[cb] << '\n';
      }
    }
  }
  write_text(cfg.output / "best_comparison.csv", best_csv.str());
  return summary;
}

std::vector<fs::path> emit_plot_data(const fs::path& dir) {
  const fs::path summary_file = dir / "summary.json";
  if (!fs::exists(summary_file)) throw StateError("no summary.json in " + dir.string());
  const json summary = read_json(summary_file);

  std::vector<std::string> missing;
  for (const json& cell : summary.at("cells")) {
    if (!cell.at("error").is_null()) continue;
    if (!fs::exists(dir / cell.at("trace_file").get<std::string>())) missing.push_back(cell.at("cell").get<std::string>());
  }
  if (!missing.empty()) {
    std::string msg = "missing traces for " + std::to_string(missing.size()) + " cell(s):";
    for (const auto& m : missing) msg += " " + m;
    throw StateError(msg);
  }

  std::ostringstream gap, batch;
  gap << "series_label,alpha,seed,x,y\n";
  batch << "series_label,alpha,seed,x,y\n";
  for (const json& cell : summary.at("cells")) {
    if (!cell.at("error").is_null()) continue;
    const CsvTable t = read_csv(dir / cell.at("trace_file").get<std::string>());
    const std::string prefix = csv_quote(cell.at("series_label").get<std::string>()) + ',' +
                               fmt(cell.at("alpha").get<double>()) + ',' +
                               std::to_string(cell.at("seed").get<std::uint64_t>()) + ',';
    const auto ck = t.column("k"), ce = t.column("eff_grad_evals"), cg = t.column("phi_gap"),
               cb = t.column("batch_fraction");
    for (const auto& row : t.rows) {
      gap << prefix << row[ce] << ',' << row[cg] << '\n';
      batch << prefix << row[ck] << ',' << row[cb] << '\n';
    }
  }
  const std::vector<fs::path> files = {dir / "plot_gap_vs_evals.csv", dir / "plot_batch_fraction.csv"};
  write_text(files[0], gap.str());
  write_text(files[1], batch.str());
  return files;
}

}  // namespace adaprox
