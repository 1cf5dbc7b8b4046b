#include "adaprox/adaprox.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"

#include "adaprox/errors.hpp"
#include "adaprox/experiment.hpp"
#include "adaprox/problems.hpp"
#include "adaprox/prox.hpp"
#include "adaprox/solver.hpp"
#include "adaprox/verify.hpp"

struct adaprox_problem {
  std::shared_ptr<adaprox::StochasticProblem> impl;
};

struct adaprox_prox {
  adaprox::ProxFunction impl;
};

struct adaprox_trace {
  adaprox::SolveResult result;
  std::string termination;
};

namespace {

using nlohmann::json;
using adaprox::Index;
using adaprox::Vector;

thread_local std::string last_error;

adaprox_status fail(adaprox_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Maps the library's exception hierarchy onto status codes.
template <class F>
adaprox_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const adaprox::UnsupportedLabelError& e) {
    return fail(ADAPROX_E_PARSE, e.what());
  } catch (const adaprox::ParseError& e) {
    return fail(ADAPROX_E_PARSE, e.what());
  } catch (const adaprox::NumericalError& e) {
    return fail(ADAPROX_E_NUMERICAL, e.what());
  } catch (const adaprox::ArgumentError& e) {
    return fail(ADAPROX_E_ARGUMENT, e.what());
  } catch (const adaprox::StateError& e) {
    return fail(ADAPROX_E_STATE, e.what());
  } catch (const adaprox::UnsupportedError& e) {
    return fail(ADAPROX_E_UNSUPPORTED, e.what());
  } catch (const adaprox::DegenerateDataError& e) {
    return fail(ADAPROX_E_DEGENERATE_DATA, e.what());
  } catch (const adaprox::ConfigError& e) {
    return fail(ADAPROX_E_CONFIG, e.what());
  } catch (const adaprox::IoError& e) {
    return fail(ADAPROX_E_IO, e.what());
  } catch (const adaprox::Error& e) {
    return fail(ADAPROX_E_INTERNAL, e.what());
  } catch (const json::exception& e) {
    return fail(ADAPROX_E_CONFIG, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ADAPROX_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ADAPROX_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ADAPROX_E_INTERNAL, e.what());
  }
}

#define REQUIRE_ARG(cond, msg) \
  if (!(cond)) return fail(ADAPROX_E_ARGUMENT, msg)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Vector copy_in(const double* v, Index n) { return Eigen::Map<const Vector>(v, n); }

json parse_json_text(const char* text, const char* what) {
  if (!text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw adaprox::ConfigError(std::string(what) + ": " + e.what());
  }
}

adaprox::ExperimentConfig config_from(const char* config_json, const char* overrides_json) {
  adaprox::ExperimentConfig cfg = adaprox::parse_config(parse_json_text(config_json, "config"));
  const json o = parse_json_text(overrides_json, "overrides");
  adaprox::ConfigOverrides ov;
  auto num = [&](const char* key) -> std::optional<double> {
    if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
    return o.at(key).get<double>();
  };
  if (o.contains("controller") && !o.at("controller").is_null()) ov.controller = o.at("controller").get<std::string>();
  ov.eta = num("eta");
  ov.beta = num("beta");
  ov.gamma = num("gamma");
  ov.alpha = num("alpha");
  ov.max_epochs = num("max_epochs");
  if (o.contains("seed") && !o.at("seed").is_null()) ov.seed = o.at("seed").get<std::uint64_t>();
  if (o.contains("out") && !o.at("out").is_null()) ov.out = o.at("out").get<std::string>();
  if (o.contains("jobs") && !o.at("jobs").is_null()) ov.jobs = o.at("jobs").get<unsigned>();
  adaprox::apply_overrides(cfg, ov);
  return cfg;
}

std::vector<std::uint64_t> seed_list(const json& o, std::size_t fallback) {
  if (o.contains("seeds") && o.at("seeds").is_array()) return o.at("seeds").get<std::vector<std::uint64_t>>();
  const std::size_t n = o.value("seeds", fallback);
  std::vector<std::uint64_t> seeds;
  const std::uint64_t base = o.value("seed_base", std::uint64_t{1000});
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(base + i);
  return seeds;
}

}  // namespace

extern "C" {

const char* adaprox_version(void) { return "0.1.0"; }

const char* adaprox_last_error(void) { return last_error.c_str(); }

const char* adaprox_status_name(adaprox_status s) {
  switch (s) {
    case ADAPROX_OK: return "ok";
    case ADAPROX_E_ARGUMENT: return "argument";
    case ADAPROX_E_STATE: return "state";
    case ADAPROX_E_UNSUPPORTED: return "unsupported";
    case ADAPROX_E_DEGENERATE_DATA: return "degenerate_data";
    case ADAPROX_E_CONFIG: return "config";
    case ADAPROX_E_IO: return "io";
    case ADAPROX_E_PARSE: return "parse";
    case ADAPROX_E_NUMERICAL: return "numerical";
    case ADAPROX_E_INTERNAL: return "internal";
  }
  return "unknown";
}

void adaprox_string_free(char* s) { std::free(s); }

adaprox_status adaprox_quadratic_random(int64_t dimension, double mu, double lipschitz, double sigma,
                                        size_t pool_size, uint64_t seed, adaprox_problem** out) {
  REQUIRE_ARG(out, "out is null");
  return guarded([&] {
    auto q = adaprox::StochasticQuadratic::random(dimension, mu, lipschitz, sigma, pool_size, seed);
    *out = new adaprox_problem{std::make_shared<adaprox::StochasticQuadratic>(std::move(q))};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_quadratic_create(int64_t dimension, const double* q, const double* b, const double* pool,
                                        size_t pool_size, adaprox_problem** out) {
  REQUIRE_ARG(out && q && b && pool, "null pointer argument");
  REQUIRE_ARG(dimension > 0 && pool_size > 0, "dimension and pool size must be positive");
  return guarded([&] {
    adaprox::Matrix qm = Eigen::Map<const adaprox::Matrix>(q, dimension, dimension);
    adaprox::Matrix pm = Eigen::Map<const adaprox::Matrix>(pool, dimension, static_cast<Index>(pool_size));
    *out = new adaprox_problem{
        std::make_shared<adaprox::StochasticQuadratic>(std::move(qm), copy_in(b, dimension), std::move(pm))};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_logistic_load(const char* path, double lambda, adaprox_problem** out) {
  REQUIRE_ARG(out && path, "null pointer argument");
  return guarded([&] {
    auto ds = std::make_shared<const adaprox::Dataset>(adaprox::read_libsvm(path));
    std::optional<double> l;
    if (lambda >= 0.0) l = lambda;
    *out = new adaprox_problem{std::make_shared<adaprox::LogisticL1>(std::move(ds), l)};
    return ADAPROX_OK;
  });
}

void adaprox_problem_free(adaprox_problem* p) { delete p; }

adaprox_status adaprox_problem_dimension(const adaprox_problem* p, int64_t* out) {
  REQUIRE_ARG(p && out, "null pointer argument");
  *out = p->impl->dimension();
  return ADAPROX_OK;
}

adaprox_status adaprox_problem_samples(const adaprox_problem* p, size_t* out) {
  REQUIRE_ARG(p && out, "null pointer argument");
  *out = p->impl->epoch_size();
  return ADAPROX_OK;
}

adaprox_status adaprox_problem_value(const adaprox_problem* p, const double* x, double* out) {
  REQUIRE_ARG(p && x && out, "null pointer argument");
  return guarded([&] {
    *out = p->impl->exact_value(copy_in(x, p->impl->dimension()));
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_problem_gradient(const adaprox_problem* p, const double* x, double* out) {
  REQUIRE_ARG(p && x && out, "null pointer argument");
  return guarded([&] {
    const Index d = p->impl->dimension();
    Eigen::Map<Vector>(out, d) = p->impl->exact_gradient(copy_in(x, d));
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_problem_regularizer(const adaprox_problem* p, adaprox_prox** out) {
  REQUIRE_ARG(p && out, "null pointer argument");
  return guarded([&] {
    if (const auto* l = dynamic_cast<const adaprox::LogisticL1*>(p->impl.get())) {
      *out = new adaprox_prox{l->regularizer()};
    } else {
      *out = new adaprox_prox{adaprox::ProxFunction::zero(p->impl->dimension())};
    }
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_zero(int64_t dimension, adaprox_prox** out) {
  REQUIRE_ARG(out, "out is null");
  return guarded([&] {
    *out = new adaprox_prox{adaprox::ProxFunction::zero(dimension)};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_l1(int64_t dimension, double weight, adaprox_prox** out) {
  REQUIRE_ARG(out, "out is null");
  return guarded([&] {
    *out = new adaprox_prox{adaprox::ProxFunction::l1(dimension, weight)};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_nonneg(int64_t dimension, adaprox_prox** out) {
  REQUIRE_ARG(out, "out is null");
  return guarded([&] {
    *out = new adaprox_prox{adaprox::ProxFunction::nonneg(dimension)};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_box(int64_t dimension, const double* lo, const double* hi, adaprox_prox** out) {
  REQUIRE_ARG(out && lo && hi, "null pointer argument");
  REQUIRE_ARG(dimension > 0, "dimension must be positive");
  return guarded([&] {
    *out = new adaprox_prox{adaprox::ProxFunction::box(copy_in(lo, dimension), copy_in(hi, dimension))};
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_halfspace(int64_t dimension, const double* normal, double offset, adaprox_prox** out) {
  REQUIRE_ARG(out && normal, "null pointer argument");
  REQUIRE_ARG(dimension > 0, "dimension must be positive");
  return guarded([&] {
    *out = new adaprox_prox{adaprox::ProxFunction::halfspace(copy_in(normal, dimension), offset)};
    return ADAPROX_OK;
  });
}

void adaprox_prox_free(adaprox_prox* h) { delete h; }

adaprox_status adaprox_prox_apply(const adaprox_prox* h, double alpha, const double* z, double* out) {
  REQUIRE_ARG(h && z && out, "null pointer argument");
  return guarded([&] {
    const Index d = h->impl.dimension();
    Eigen::Map<Vector>(out, d) = h->impl.prox(alpha, copy_in(z, d));
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_prox_evaluate(const adaprox_prox* h, const double* x, double* out) {
  REQUIRE_ARG(h && x && out, "null pointer argument");
  return guarded([&] {
    *out = h->impl.evaluate(copy_in(x, h->impl.dimension()));
    return ADAPROX_OK;
  });
}

void adaprox_solver_options_init(adaprox_solver_options* opts) {
  if (!opts) return;
  opts->controller = ADAPROX_CONTROLLER_NORM;
  opts->parameter = 0.9;
  opts->alpha = 1.0;
  opts->theory_eta = 0.5;
  opts->max_epochs = 100.0;
  opts->step_tolerance = 1e-8;
  opts->seed = 0;
  opts->record_every = 1;
  opts->initial_batch = 2;
  opts->max_iterations = 0;
  opts->cap = 0;
  opts->resample_all = 0;
  opts->phi_star = std::nan("");
}

adaprox_status adaprox_solve(const adaprox_problem* p, const adaprox_prox* h, const adaprox_solver_options* opts,
                             const double* x0, adaprox_trace** out) {
  REQUIRE_ARG(p && h && opts && out, "null pointer argument");
  return guarded([&] {
    adaprox::SolverConfig cfg;
    switch (opts->controller) {
      case ADAPROX_CONTROLLER_NORM: cfg.controller.kind = adaprox::control::Norm{opts->parameter}; break;
      case ADAPROX_CONTROLLER_IP: cfg.controller.kind = adaprox::control::InnerProduct{opts->parameter}; break;
      case ADAPROX_CONTROLLER_GEOMETRIC:
        cfg.controller.kind = adaprox::control::Geometric{opts->initial_batch, opts->parameter};
        break;
      case ADAPROX_CONTROLLER_ORACLE: cfg.controller.kind = adaprox::control::OracleNorm{opts->parameter}; break;
      default: throw adaprox::ArgumentError("unknown controller");
    }
    if (opts->cap) cfg.controller.cap = opts->cap;
    if (opts->alpha > 0.0) {
      cfg.alpha = opts->alpha;
    } else {
      cfg.alpha = adaprox::TheoryStep{opts->theory_eta};
    }
    cfg.max_epochs = opts->max_epochs;
    cfg.step_tolerance = opts->step_tolerance;
    cfg.seed = opts->seed;
    cfg.record_every = opts->record_every;
    cfg.initial_batch = opts->initial_batch;
    if (opts->max_iterations) cfg.max_iterations = opts->max_iterations;
    cfg.resample_all = opts->resample_all != 0;
    if (!std::isnan(opts->phi_star)) cfg.phi_star = opts->phi_star;
    const Index d = p->impl->dimension();
    const Vector start = x0 ? copy_in(x0, d) : Vector::Zero(d);
    auto trace = std::make_unique<adaprox_trace>();
    trace->result = adaprox::solve(*p->impl, h->impl, cfg, start);
    trace->termination = adaprox::to_string(trace->result.reason);
    *out = trace.release();
    return ADAPROX_OK;
  });
}

void adaprox_trace_free(adaprox_trace* t) { delete t; }

size_t adaprox_trace_length(const adaprox_trace* t) { return t ? t->result.trace.size() : 0; }

adaprox_status adaprox_trace_record(const adaprox_trace* t, size_t i, adaprox_record* out) {
  REQUIRE_ARG(t && out, "null pointer argument");
  REQUIRE_ARG(i < t->result.trace.size(), "record index out of range");
  const adaprox::RunRecord& r = t->result.trace[i];
  out->iteration = r.iteration;
  out->batch_size = r.batch_size;
  out->cumulative_samples = r.cumulative_samples;
  out->effective_gradient_evaluations = r.effective_gradient_evaluations;
  out->phi = r.phi;
  out->phi_gap = r.phi_gap;
  out->step_norm_over_alpha = r.step_norm_over_alpha;
  out->trial_step_norm_over_alpha = r.trial_step_norm_over_alpha;
  out->resampled = r.resampled ? 1 : 0;
  out->wall_ms = r.wall_ms;
  return ADAPROX_OK;
}

adaprox_status adaprox_trace_solution(const adaprox_trace* t, double* x) {
  REQUIRE_ARG(t && x, "null pointer argument");
  Eigen::Map<Vector>(x, t->result.x.size()) = t->result.x;
  return ADAPROX_OK;
}

const char* adaprox_trace_termination(const adaprox_trace* t) { return t ? t->termination.c_str() : ""; }

adaprox_status adaprox_run_experiment(const char* config_json, const char* overrides_json, char** summary_json) {
  REQUIRE_ARG(config_json && summary_json, "null pointer argument");
  return guarded([&] {
    const adaprox::ExperimentConfig cfg = config_from(config_json, overrides_json);
    const adaprox::ExperimentSummary s = adaprox::run_experiment(cfg);
    json j;
    j["directory"] = s.directory.string();
    j["cells"] = s.cells.size();
    std::size_t failed = 0;
    for (const auto& c : s.cells) failed += c.error.empty() ? 0 : 1;
    j["failed_cells"] = failed;
    j["best"] = json::array();
    for (const auto& b : s.best) {
      j["best"].push_back({{"series_label", b.series_label},
                           {"alpha", std::isfinite(b.alpha) ? json(b.alpha) : json(nullptr)},
                           {"mean_final_gap", std::isfinite(b.mean_final_gap) ? json(b.mean_final_gap) : json(nullptr)}});
    }
    j["phi_star"] = s.reference.phi_star;
    *summary_json = dup_string(j.dump(2));
    if (s.numerical_failure) {
      last_error = "numerical failure in " + std::to_string(failed) + " cell(s); see summary.json";
      return ADAPROX_E_NUMERICAL;
    }
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_compute_reference(const char* config_json, const char* overrides_json, char** reference_json) {
  REQUIRE_ARG(config_json && reference_json, "null pointer argument");
  return guarded([&] {
    const adaprox::ExperimentConfig cfg = config_from(config_json, overrides_json);
    const adaprox::ReferenceRecord r = adaprox::compute_reference(cfg);
    const json j = {{"phi_star", r.phi_star}, {"x_norm", r.x_norm},   {"alpha", r.alpha},
                    {"iterations", r.iterations}, {"hash", r.hash}, {"cached", r.cached}};
    *reference_json = dup_string(j.dump(2));
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_emit_plot_data(const char* directory, char** files_json) {
  REQUIRE_ARG(directory && files_json, "null pointer argument");
  return guarded([&] {
    json j = json::array();
    for (const auto& f : adaprox::emit_plot_data(directory)) j.push_back(f.string());
    *files_json = dup_string(j.dump(2));
    return ADAPROX_OK;
  });
}

adaprox_status adaprox_verify(const char* suite, const char* options_json, char** report_json, int* passed) {
  REQUIRE_ARG(suite && report_json && passed, "null pointer argument");
  return guarded([&] {
    namespace v = adaprox::verify;
    const json o = parse_json_text(options_json, "options");
    const std::string name = suite;
    const double eta = o.value("eta", 0.5);
    const std::uint64_t instance_seed = o.value("instance_seed", std::uint64_t{11});
    std::string report;
    bool ok = false;
    if (name == "linear" || name == "sublinear") {
      const bool linear = name == "linear";
      const v::RateInstance inst =
          v::make_rate_instance(linear ? o.value("mu_over_L", 0.1) : 0.0, instance_seed, o.value("dimension", 10),
                                o.value("sigma", 1.0), o.value("pool_size", std::size_t{100}), o.value("distance", 10.0));
      v::RateCheckOptions ro;
      ro.first_k = o.value("first_k", static_cast<std::size_t>(linear ? 0 : 5));
      const auto seeds = seed_list(o, 200);
      const std::size_t horizon = o.value("horizon", static_cast<std::size_t>(linear ? 30 : 50));
      const v::RateCheckReport r = linear ? v::check_linear_rate(inst.problem, inst.x0, eta, seeds, horizon, ro)
                                          : v::check_sublinear_rate(inst.problem, inst.x0, eta, seeds, horizon, ro);
      report = r.to_json();
      ok = r.pass;
    } else if (name == "eq_test") {
      const v::EqTestSuiteReport r =
          v::run_eq_test_suite(o.value("instances", std::size_t{50}), o.value("seed", std::uint64_t{1}), eta);
      report = r.to_json();
      ok = r.pass;
    } else if (name == "figure1") {
      json j = json::array();
      for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const v::Figure1Report r = v::figure1_geometry(t);
        j.push_back({{"distance", r.distance},
                     {"gradient_norm", r.gradient_norm},
                     {"composite_requirement", r.composite_requirement},
                     {"naive_requirement", r.naive_requirement},
                     {"ratio", r.ratio},
                     {"unconstrained_ratio", r.unconstrained_ratio}});
      }
      ok = v::check_figure1_phenomenon();
      report = json{{"points", j}, {"pass", ok}}.dump(2);
    } else {
      throw adaprox::ArgumentError("unknown verify suite '" + name + "' (linear, sublinear, eq_test, figure1)");
    }
    *report_json = dup_string(report);
    *passed = ok ? 1 : 0;
    return ADAPROX_OK;
  });
}

}  // extern "C"
