#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adaprox/controllers.hpp"
#include "adaprox/problems.hpp"
#include "adaprox/prox.hpp"
#include "adaprox/sampling.hpp"

namespace adaprox {

/// alpha = (1 - eta) / L; needs a problem that exposes L.
struct TheoryStep {
  double eta = 0.5;
};

struct SolverConfig {
  std::variant<double, TheoryStep> alpha = 1.0;
  /// Optional per-iteration steplength; receives (k, base alpha). Defaults to constant.
  std::function<double(std::size_t, double)> alpha_schedule;
  double max_epochs = 100.0;
  std::optional<std::size_t> max_iterations;
  double step_tolerance = 1e-8;
  ControllerConfig controller;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  /// Also record whenever cumulative samples cross a multiple of this many
  /// epochs (0 disables). Lets long runs record sparsely in k.
  double record_every_epochs = 0.0;
  std::size_t initial_batch = 2;
  SamplingMode sampling = SamplingMode::kWithReplacement;
  /// Step 3 redraws all S_k samples instead of augmenting the trial batch.
  bool resample_all = false;
  /// phi* for phi_gap; when absent the gap column is NaN.
  std::optional<double> phi_star;
  unsigned workers = 1;
  OracleOptions oracle;
  /// Fill RunRecord::wall_ms (off by default so traces replay bit-exactly).
  bool timing = false;
};

struct RunRecord {
  std::size_t iteration = 0;
  /// Batch size that produced x_k (S0 for the initial record).
  std::size_t batch_size = 0;
  std::uint64_t cumulative_samples = 0;
  double effective_gradient_evaluations = 0.0;
  double phi = 0.0;
  double phi_gap = 0.0;
  /// ||x_k - x_{k-1}|| / alpha for the committed step (NaN at k = 0).
  double step_norm_over_alpha = 0.0;
  /// Same for the trial step of iteration k-1.
  double trial_step_norm_over_alpha = 0.0;
  bool resampled = false;
  double wall_ms = 0.0;
};

enum class Termination {
  kStepTolerance,
  kSampleBudget,
  kIterationLimit,
  kDegenerateDecrease,
};

std::string to_string(Termination t);

struct SolveResult {
  Vector x;
  std::vector<RunRecord> trace;
  Termination reason = Termination::kIterationLimit;
  double alpha = 0.0;
  std::size_t iterations = 0;
  std::uint64_t cumulative_samples = 0;
};

/// Resolves the configured steplength for problem p.
double resolve_alpha(const SolverConfig& cfg, const StochasticProblem& p);

/// Two-stage adaptive-sampling proximal gradient iteration: trial step with the
/// current batch, batch-size decision, optional augmentation and re-step.
SolveResult solve(const StochasticProblem& p, const ProxFunction& h, const SolverConfig& cfg,
                  const Vector& x0);

struct DeterministicOptions {
  /// Track the best iterate seen.
  bool keep_best = false;
  /// Record phi(x_k) for every k.
  bool record_phi = false;
  /// Throw DivergenceError after this many consecutive phi increases (0 = never).
  std::size_t divergence_window = 100;
};

struct DeterministicResult {
  Vector x;
  Vector best_x;
  double best_phi = 0.0;
  std::vector<double> phi;
  std::size_t iterations = 0;
};

/// x <- prox(h, alpha, x - alpha grad f(x)) for `iters` steps.
DeterministicResult solve_deterministic(const StochasticProblem& p, const ProxFunction& h, double alpha,
                                        std::size_t iters, const Vector& x0,
                                        const DeterministicOptions& opts = {});

}  // namespace adaprox
