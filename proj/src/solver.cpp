#include "adaprox/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "adaprox/errors.hpp"

namespace adaprox {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t initial_batch_for(const SolverConfig& cfg) {
  if (const auto* g = std::get_if<control::Geometric>(&cfg.controller.kind)) {
    return required_batch_geometric(0, g->initial, g->gamma);
  }
  return cfg.initial_batch;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kStepTolerance: return "step_tolerance";
    case Termination::kSampleBudget: return "sample_budget";
    case Termination::kIterationLimit: return "iteration_limit";
    case Termination::kDegenerateDecrease: return "degenerate_decrease";
  }
  return "unknown";
}

double resolve_alpha(const SolverConfig& cfg, const StochasticProblem& p) {
  const double alpha = std::visit(
      Overloaded{[](double a) { return a; },
                 [&](const TheoryStep& t) {
                   if (!(t.eta > 0.0 && t.eta < 1.0)) throw ArgumentError("theory step: eta must lie in (0,1)");
                   const auto lip = p.lipschitz();
                   if (!lip) throw ArgumentError("theory step: problem does not expose L");
                   return (1.0 - t.eta) / *lip;
                 }},
      cfg.alpha);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive and finite");
  return alpha;
}

SolveResult solve(const StochasticProblem& p, const ProxFunction& h, const SolverConfig& cfg,
                  const Vector& x0) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();

  if (x0.size() != p.dimension() || h.dimension() != p.dimension()) {
    throw ArgumentError("solve: dimension mismatch");
  }
  cfg.controller.validate();
  if (cfg.initial_batch < 2) throw ArgumentError("solve: initial batch must be >= 2");
  if (cfg.record_every < 1) throw ArgumentError("solve: record_every must be >= 1");
  if (!(cfg.max_epochs > 0.0)) throw ArgumentError("solve: max_epochs must be positive");
  if (cfg.step_tolerance < 0.0) throw ArgumentError("solve: step tolerance must be >= 0");
  if (!(cfg.record_every_epochs >= 0.0)) throw ArgumentError("solve: record_every_epochs must be >= 0");

  const double phi0 = exact_phi(p, h, x0);
  if (!std::isfinite(phi0)) throw ArgumentError("solve: x0 is infeasible (phi(x0) is not finite)");

  const double alpha0 = resolve_alpha(cfg, p);
  const auto n_samples = p.sample_space_size();
  const std::size_t epoch = p.epoch_size();
  const bool finite_sum = p.finite_sum();
  std::optional<std::size_t> cap = cfg.controller.cap;
  if (!cap && finite_sum) cap = n_samples;
  const double budget = cfg.max_epochs * static_cast<double>(epoch);

  const auto* quadratic = dynamic_cast<const StochasticQuadratic*>(&p);
  if (std::holds_alternative<control::OracleNorm>(cfg.controller.kind) && !quadratic) {
    throw UnsupportedError("oracle controller needs an enumerable pool-noise problem");
  }
  const bool needs_gradients = std::holds_alternative<control::InnerProduct>(cfg.controller.kind);

  SamplingOptions sopts;
  sopts.mode = cfg.sampling;
  sopts.retain_gradients = needs_gradients;
  sopts.workers = cfg.workers;

  std::size_t batch = initial_batch_for(cfg);
  if (batch < 2) throw ArgumentError("solve: initial batch must be >= 2");
  if (cap && batch > *cap) batch = *cap;

  SolveResult result;
  result.alpha = alpha0;
  Vector x = x0;
  std::uint64_t cumulative = 0;

  auto elapsed_ms = [&] {
    return cfg.timing ? std::chrono::duration<double, std::milli>(Clock::now() - started).count() : 0.0;
  };
  auto make_record = [&](std::size_t k, std::size_t s, double step, double trial_step, bool resampled) {
    RunRecord r;
    r.iteration = k;
    r.batch_size = s;
    r.cumulative_samples = cumulative;
    r.effective_gradient_evaluations = static_cast<double>(cumulative) / static_cast<double>(epoch);
    r.phi = exact_phi(p, h, x);
    if (std::isnan(r.phi)) throw NumericalError("objective is NaN", k);
    r.phi_gap = cfg.phi_star ? r.phi - *cfg.phi_star : kNaN;
    r.step_norm_over_alpha = step;
    r.trial_step_norm_over_alpha = trial_step;
    r.resampled = resampled;
    r.wall_ms = elapsed_ms();
    result.trace.push_back(r);
  };
  make_record(0, batch, kNaN, kNaN, false);

  const double checkpoint = cfg.record_every_epochs * static_cast<double>(epoch);
  auto checkpoints_passed = [&](std::uint64_t samples) {
    return checkpoint > 0.0 ? std::floor(static_cast<double>(samples) / checkpoint) : 0.0;
  };

  std::size_t k = 0;
  while (true) {
    const double checkpoints_before = checkpoints_passed(cumulative);
    if (cfg.max_iterations && k >= *cfg.max_iterations) {
      result.reason = Termination::kIterationLimit;
      break;
    }
    const double alpha = cfg.alpha_schedule ? cfg.alpha_schedule(k, alpha0) : alpha0;
    if (!(alpha > 0.0)) throw ArgumentError("alpha schedule returned a non-positive steplength");

    // Step 1: trial gradient and trial proximal step.
    RngStream trial_rng(cfg.seed, k, 0);
    const bool saturated = finite_sum && n_samples && batch >= *n_samples;
    if (k > 0 && static_cast<double>(cumulative + (saturated ? *n_samples : batch)) > budget) {
      result.reason = Termination::kSampleBudget;
      result.trace.back().wall_ms = elapsed_ms();
      break;
    }
    GradientEstimate trial = saturated ? full_population(p, x, sopts) : estimate(p, x, batch, trial_rng, sopts);
    cumulative += trial.batch_size;
    if (!trial.mean.allFinite()) throw NumericalError("non-finite gradient estimate", k);
    const Vector trial_point = h.prox(alpha, x - alpha * trial.mean);
    const double trial_norm = (trial_point - x).norm() / alpha;

    std::size_t next = batch;
    bool resampled = false;
    bool stop = false;
    Vector x_next = trial_point;

    if (trial_norm <= cfg.step_tolerance) {
      result.reason = Termination::kStepTolerance;
      stop = true;
    } else {
      // Step 2: batch-size decision.
      const StepContext ctx{x, trial, trial_point, alpha, h.evaluate(x), h.evaluate(trial_point), k, batch, cap};
      double raw = 0.0;
      bool degenerate = false;
      std::visit(Overloaded{[&](const control::Norm& c) {
                              const auto req = required_batch_norm(ctx, c.eta);
                              raw = req.raw;
                              degenerate = req.degenerate;
                            },
                            [&](const control::InnerProduct& c) {
                              const auto req = required_batch_ip(ctx, c.beta);
                              raw = req.raw;
                              degenerate = req.degenerate;
                            },
                            [&](const control::Geometric& c) {
                              raw = static_cast<double>(required_batch_geometric(k, c.initial, c.gamma));
                            },
                            [&](const control::OracleNorm& c) {
                              raw = required_batch_oracle(*quadratic, x, h, alpha, c.eta, cfg.oracle);
                            }},
                 cfg.controller.kind);

      if (degenerate) {
        result.reason = Termination::kDegenerateDecrease;
        stop = true;
      } else {
        next = next_batch_size(raw, batch, cap);
        // Step 3: enlarge the batch and recompute the step.
        if (next > batch) {
          const std::uint64_t extra = cfg.resample_all ? next : next - batch;
          if (static_cast<double>(cumulative + extra) > budget) {
            result.reason = Termination::kSampleBudget;
            result.trace.back().wall_ms = elapsed_ms();
            break;
          }
          RngStream second_rng(cfg.seed, k, 1);
          GradientEstimate committed;
          if (finite_sum && n_samples && next >= *n_samples) {
            committed = full_population(p, x, sopts);
          } else if (cfg.resample_all) {
            committed = estimate(p, x, next, second_rng, sopts);
          } else {
            committed = augment(trial, p, x, next, second_rng, sopts);
          }
          cumulative += extra;
          if (!committed.mean.allFinite()) throw NumericalError("non-finite gradient estimate", k);
          x_next = h.prox(alpha, x - alpha * committed.mean);
          resampled = true;
        }
      }
    }

    const double step_norm = (x_next - x).norm() / alpha;
    x = std::move(x_next);
    batch = next;  // Step 4
    ++k;

    if (!stop && step_norm <= cfg.step_tolerance) {
      result.reason = Termination::kStepTolerance;
      stop = true;
    }
    if (!stop && static_cast<double>(cumulative) >= budget) {
      result.reason = Termination::kSampleBudget;
      stop = true;
    }
    const bool last = stop || (cfg.max_iterations && k >= *cfg.max_iterations);
    const bool crossed = checkpoints_passed(cumulative) > checkpoints_before;
    if (last || crossed || k % cfg.record_every == 0) make_record(k, batch, step_norm, trial_norm, resampled);
    if (stop) break;
  }

  result.x = std::move(x);
  result.iterations = k;
  result.cumulative_samples = cumulative;
  return result;
}

DeterministicResult solve_deterministic(const StochasticProblem& p, const ProxFunction& h, double alpha,
                                        std::size_t iters, const Vector& x0,
                                        const DeterministicOptions& opts) {
  if (!(alpha > 0.0)) throw ArgumentError("solve_deterministic: alpha must be positive");
  if (x0.size() != p.dimension() || h.dimension() != p.dimension()) {
    throw ArgumentError("solve_deterministic: dimension mismatch");
  }
  DeterministicResult out;
  Vector x = x0;
  double previous = std::numeric_limits<double>::infinity();
  std::size_t rising = 0;
  out.best_phi = std::numeric_limits<double>::infinity();
  if (opts.record_phi) out.phi.reserve(iters + 1);

  auto observe = [&](std::size_t k, double phi) {
    if (std::isnan(phi)) throw NumericalError("objective is NaN", k);
    if (opts.record_phi) out.phi.push_back(phi);
    if (opts.keep_best && phi < out.best_phi) {
      out.best_phi = phi;
      out.best_x = x;
    }
    if (phi > previous) {
      if (opts.divergence_window && ++rising >= opts.divergence_window) {
        throw DivergenceError("phi increased for " + std::to_string(rising) +
                                  " consecutive iterations; try a smaller alpha",
                              k);
      }
    } else {
      rising = 0;
    }
    previous = phi;
  };

  for (std::size_t k = 0; k < iters; ++k) {
    auto [f, grad] = p.exact_value_and_gradient(x);
    if (!grad.allFinite()) throw NumericalError("non-finite gradient", k);
    observe(k, f + h.evaluate(x));
    x = h.prox(alpha, x - alpha * grad);
  }
  observe(iters, exact_phi(p, h, x));
  out.x = x;
  out.iterations = iters;
  if (!opts.keep_best) {
    out.best_x = x;
    out.best_phi = out.phi.empty() ? exact_phi(p, h, x) : out.phi.back();
  }
  return out;
}

}  // namespace adaprox
