#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "adaprox/problems.hpp"
#include "adaprox/rng.hpp"

namespace adaprox {

enum class SamplingMode { kWithReplacement, kWithoutReplacement };

struct SamplingOptions {
  SamplingMode mode = SamplingMode::kWithReplacement;
  /// Keep the per-sample gradients (needed for directional variances).
  bool retain_gradients = false;
  /// Worker threads for per-sample gradient evaluation. The combine step is
  /// ordered, so results do not depend on this value.
  unsigned workers = 1;
};

/// Batch mean gradient with the statistics the batch-size tests need.
struct GradientEstimate {
  Vector mean;
  std::size_t batch_size = 0;
  /// sum_i ||grad F(x, theta_i) - mean||^2
  double sum_sq_dev = 0.0;
  /// d x S per-sample gradients, in sample order, when retained.
  std::optional<Matrix> gradients;
  std::vector<std::size_t> sample_ids;
  /// Every id of a finite-sum problem was used exactly once.
  bool full_population = false;
};

/// Draws S ids and returns the batch statistics. Requires S >= 2.
GradientEstimate estimate(const StochasticProblem& p, const Vector& x, std::size_t batch_size,
                          RngStream& rng, const SamplingOptions& opts = {});

/// Batch statistics over an explicit id list (ids may repeat).
GradientEstimate estimate_from_ids(const StochasticProblem& p, const Vector& x,
                                   std::span<const std::size_t> ids, const SamplingOptions& opts = {});

/// Exact gradient over all N ids of a finite sample space.
GradientEstimate full_population(const StochasticProblem& p, const Vector& x,
                                 const SamplingOptions& opts = {});

/// sum_sq_dev / (S - 1). Throws StateError when S < 2.
double sample_variance_total(const GradientEstimate& e);

/// (1/(S-1)) sum_i ((grad F(x, theta_i) - mean)^T d)^2. Throws StateError
/// when gradients were not retained or S < 2.
double sample_variance_directional(const GradientEstimate& e, const Vector& d);

/// Pairwise (Chan et al.) combination of two disjoint batch summaries.
GradientEstimate merge(const GradientEstimate& first, const GradientEstimate& second);

/// Grows `e` (computed at x) to `target` samples by drawing target - S new ids.
/// Without replacement, new ids avoid those already in the batch.
GradientEstimate augment(const GradientEstimate& e, const StochasticProblem& p, const Vector& x,
                         std::size_t target, RngStream& rng, const SamplingOptions& opts = {});

/// Draws `count` ids from [0, n); `exclude` lists ids to avoid when sampling
/// without replacement.
std::vector<std::size_t> draw_ids(std::size_t n, std::size_t count, RngStream& rng, SamplingMode mode,
                                  std::span<const std::size_t> exclude = {});

}  // namespace adaprox
