#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "adaprox/problems.hpp"
#include "adaprox/prox.hpp"
#include "adaprox/sampling.hpp"

namespace adaprox {

namespace control {

/// Total-variance test on the trial proximal step.
struct Norm {
  double eta = 0.9;
};

/// Directional-variance test along the trial step.
struct InnerProduct {
  double beta = 0.9;
};

/// S_k = ceil(S0 (1 + gamma)^k), independent of the iterates.
struct Geometric {
  std::size_t initial = 2;
  double gamma = 0.1;
};

/// Verification-only: exact population variance and exact expected step.
struct OracleNorm {
  double eta = 0.5;
};

}  // namespace control

struct ControllerConfig {
  std::variant<control::Norm, control::InnerProduct, control::Geometric, control::OracleNorm> kind =
      control::Norm{};
  /// Upper bound on S_k (N for finite-sum problems).
  std::optional<std::size_t> cap;

  /// Throws ArgumentError unless eta, beta in (0,1), gamma > 0, S0 >= 2.
  void validate() const;

  /// "NORM", "IP", "GEOMETRIC" or "ORACLE".
  std::string method() const;
  /// e.g. "NORM η=0.9", "GEOMETRIC γ=0.2".
  std::string label() const;
};

/// beta of the inner-product test matched to a norm-test eta via eta = 2(1-beta)^2.
double beta_from_eta(double eta);
double eta_from_beta(double beta);

/// Everything a controller may look at after the trial step.
struct StepContext {
  const Vector& x;
  const GradientEstimate& trial;
  /// prox(h, alpha, x - alpha * trial.mean)
  const Vector& trial_point;
  double alpha = 1.0;
  double h_at_x = 0.0;
  double h_at_trial = 0.0;
  std::size_t iteration = 0;
  std::size_t current_batch = 2;
  std::optional<std::size_t> cap;
};

/// Raw requirement a (real, before rounding) or a degeneracy signal.
struct BatchRequest {
  double raw = 0.0;
  bool degenerate = false;
};

/// a = sample_variance_total / ((eta/2) ||(trial - x)/alpha||^2).
/// Degenerate when the trial step is zero.
BatchRequest required_batch_norm(const StepContext& ctx, double eta);

/// a = directional variance along d / ((1-beta)^2 D^2) with
/// d = (trial - x)/alpha and D = mean^T d + h(trial) - h(x).
/// Degenerate when |D| <= 1e-14 (1 + |h(x)|). When D > 0 (no model decrease)
/// requests the cap, or 2S without one.
BatchRequest required_batch_ip(const StepContext& ctx, double beta);

std::size_t required_batch_geometric(std::size_t k, std::size_t initial, double gamma);

struct OracleOptions {
  /// Multisets of size S are enumerated when their count is at most this.
  std::size_t enumeration_limit = 200000;
  std::size_t monte_carlo_draws = 100000;
  std::uint64_t seed = 0x0c0ffee;
  /// Largest S considered; returned when the condition never holds below it.
  std::size_t max_batch = std::size_t{1} << 40;
};

/// Smallest S with popvar / S <= (eta/2) ||(E[x+] - x)/alpha||^2, where x+ is
/// the proximal step with the mean of S i.i.d. pool samples.
double required_batch_oracle(const StochasticQuadratic& p, const Vector& x, const ProxFunction& h,
                             double alpha, double eta, const OracleOptions& opts = {});

/// E[prox(h, alpha, x - alpha g_S)] for g_S the mean of S i.i.d. pool samples,
/// by multiset enumeration or Monte Carlo (see OracleOptions).
Vector expected_prox_step(const StochasticQuadratic& p, const Vector& x, const ProxFunction& h,
                          double alpha, std::size_t batch, const OracleOptions& opts = {});

/// S_k = min(cap, max(ceil(raw), S)).
std::size_t next_batch_size(double raw, std::size_t current, std::optional<std::size_t> cap);

}  // namespace adaprox
