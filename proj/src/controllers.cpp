#include "adaprox/controllers.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "adaprox/errors.hpp"

namespace adaprox {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw ArgumentError(std::string(name) + " must lie in (0, 1)");
}

std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Adapts RngStream to the standard UniformRandomBitGenerator interface.
struct BitSource {
  using result_type = std::uint64_t;
  RngStream& rng;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return rng.next(); }
};

double log_multiset_count(std::size_t pool, std::size_t batch) {
  // log C(pool + batch - 1, batch)
  return std::lgamma(static_cast<double>(pool + batch)) - std::lgamma(static_cast<double>(batch + 1)) -
         std::lgamma(static_cast<double>(pool));
}

}  // namespace

void ControllerConfig::validate() const {
  std::visit(Overloaded{[](const control::Norm& c) { require_open_unit(c.eta, "eta"); },
                        [](const control::InnerProduct& c) { require_open_unit(c.beta, "beta"); },
                        [](const control::Geometric& c) {
                          if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) {
                            throw ArgumentError("gamma must be positive");
                          }
                          if (c.initial < 2) throw ArgumentError("S0 must be >= 2");
                        },
                        [](const control::OracleNorm& c) { require_open_unit(c.eta, "eta"); }},
             kind);
  if (cap && *cap < 1) throw ArgumentError("cap must be positive");
}

std::string ControllerConfig::method() const {
  return std::visit(Overloaded{[](const control::Norm&) { return std::string("NORM"); },
                               [](const control::InnerProduct&) { return std::string("IP"); },
                               [](const control::Geometric&) { return std::string("GEOMETRIC"); },
                               [](const control::OracleNorm&) { return std::string("ORACLE"); }},
                    kind);
}

std::string ControllerConfig::label() const {
  return std::visit(
      Overloaded{[](const control::Norm& c) { return "NORM η=" + format_param(c.eta); },
                 [](const control::InnerProduct& c) { return "IP β=" + format_param(c.beta); },
                 [](const control::Geometric& c) { return "GEOMETRIC γ=" + format_param(c.gamma); },
                 [](const control::OracleNorm& c) { return "ORACLE η=" + format_param(c.eta); }},
      kind);
}

double beta_from_eta(double eta) {
  require_open_unit(eta, "eta");
  return 1.0 - std::sqrt(eta / 2.0);
}

double eta_from_beta(double beta) {
  require_open_unit(beta, "beta");
  return 2.0 * (1.0 - beta) * (1.0 - beta);
}

BatchRequest required_batch_norm(const StepContext& ctx, double eta) {
  require_open_unit(eta, "eta");
  const double step_sq = ((ctx.trial_point - ctx.x) / ctx.alpha).squaredNorm();
  if (!(step_sq > 0.0)) return {0.0, true};
  const double variance = sample_variance_total(ctx.trial);
  return {variance / (0.5 * eta * step_sq), false};
}

BatchRequest required_batch_ip(const StepContext& ctx, double beta) {
  require_open_unit(beta, "beta");
  const Vector direction = (ctx.trial_point - ctx.x) / ctx.alpha;
  const double decrease = ctx.trial.mean.dot(direction) + ctx.h_at_trial - ctx.h_at_x;
  if (!std::isfinite(decrease)) return {0.0, true};
  if (std::abs(decrease) <= 1e-14 * (1.0 + std::abs(ctx.h_at_x))) return {0.0, true};
  if (decrease > 0.0) {
    const double fallback = ctx.cap ? static_cast<double>(*ctx.cap) : 2.0 * static_cast<double>(ctx.current_batch);
    return {fallback, false};
  }
  const double variance = sample_variance_directional(ctx.trial, direction);
  const double slack = (1.0 - beta) * (1.0 - beta);
  return {variance / (slack * decrease * decrease), false};
}

std::size_t required_batch_geometric(std::size_t k, std::size_t initial, double gamma) {
  const double raw = static_cast<double>(initial) * std::pow(1.0 + gamma, static_cast<double>(k));
  if (!(raw < 9.0e15)) return static_cast<std::size_t>(9.0e15);
  return static_cast<std::size_t>(std::ceil(raw));
}

Vector expected_prox_step(const StochasticQuadratic& p, const Vector& x, const ProxFunction& h,
                          double alpha, std::size_t batch, const OracleOptions& opts) {
  if (batch < 1) throw ArgumentError("expected_prox_step: batch must be >= 1");
  const Vector grad = p.exact_gradient(x);
  if (h.is_identity()) return x - alpha * grad;

  const Matrix& pool = p.pool();
  const std::size_t pool_n = p.pool_size();
  const Index d = p.dimension();
  const double inv_s = 1.0 / static_cast<double>(batch);
  const Vector base = x - alpha * grad;

  const double log_count = log_multiset_count(pool_n, batch);
  if (log_count <= std::log(static_cast<double>(opts.enumeration_limit))) {
    // Enumerate count vectors c with sum c = S; weight S! / prod(c_i!) / P^S.
    Vector acc = Vector::Zero(d);
    std::vector<std::size_t> counts(pool_n, 0);
    const double log_norm = std::lgamma(static_cast<double>(batch + 1)) -
                            static_cast<double>(batch) * std::log(static_cast<double>(pool_n));
    Vector noise(d);
    auto visit = [&](auto&& self, std::size_t slot, std::size_t left, double log_w) -> void {
      if (slot + 1 == pool_n) {
        counts[slot] = left;
        const double w = std::exp(log_norm + log_w - std::lgamma(static_cast<double>(left + 1)));
        noise.setZero();
        for (std::size_t i = 0; i < pool_n; ++i)
          if (counts[i]) noise += static_cast<double>(counts[i]) * pool.col(static_cast<Index>(i));
        acc += w * h.prox(alpha, base - alpha * inv_s * noise);
        return;
      }
      for (std::size_t c = 0; c <= left; ++c) {
        counts[slot] = c;
        self(self, slot + 1, left - c, log_w - std::lgamma(static_cast<double>(c + 1)));
      }
    };
    visit(visit, 0, batch, 0.0);
    return acc;
  }

  // Monte Carlo over multinomial count vectors.
  RngStream rng(opts.seed, batch, 0x0c1e);
  BitSource bits{rng};
  Vector acc = Vector::Zero(d);
  Vector noise(d);
  for (std::size_t draw = 0; draw < opts.monte_carlo_draws; ++draw) {
    noise.setZero();
    std::size_t left = batch;
    for (std::size_t i = 0; i < pool_n && left > 0; ++i) {
      std::size_t c = left;
      if (i + 1 < pool_n) {
        const double prob = 1.0 / static_cast<double>(pool_n - i);
        std::binomial_distribution<std::size_t> binom(left, prob);
        c = binom(bits);
      }
      if (c) noise += static_cast<double>(c) * pool.col(static_cast<Index>(i));
      left -= c;
    }
    acc += h.prox(alpha, base - alpha * inv_s * noise);
  }
  return acc / static_cast<double>(opts.monte_carlo_draws);
}

double required_batch_oracle(const StochasticQuadratic& p, const Vector& x, const ProxFunction& h,
                             double alpha, double eta, const OracleOptions& opts) {
  require_open_unit(eta, "eta");
  if (!(alpha > 0.0)) throw ArgumentError("oracle: alpha must be positive");
  const double popvar = p.population_variance();
  if (popvar == 0.0) return 1.0;

  if (h.is_identity()) {
    const double step_sq = p.exact_gradient(x).squaredNorm();
    if (!(step_sq > 0.0)) return static_cast<double>(opts.max_batch);
    const double s = std::ceil(popvar / (0.5 * eta * step_sq));
    return std::min(std::max(s, 1.0), static_cast<double>(opts.max_batch));
  }

  auto satisfied = [&](std::size_t s) {
    const Vector mean_step = (expected_prox_step(p, x, h, alpha, s, opts) - x) / alpha;
    return popvar / static_cast<double>(s) <= 0.5 * eta * mean_step.squaredNorm();
  };
  if (satisfied(1)) return 1.0;
  std::size_t lo = 1;
  std::size_t hi = 2;
  while (!satisfied(hi)) {
    lo = hi;
    if (hi >= opts.max_batch) return static_cast<double>(opts.max_batch);
    hi = std::min(opts.max_batch, hi * 2);
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (satisfied(mid) ? hi : lo) = mid;
  }
  return static_cast<double>(hi);
}

std::size_t next_batch_size(double raw, std::size_t current, std::optional<std::size_t> cap) {
  if (std::isnan(raw) || raw < 0.0) throw ArgumentError("next_batch_size: raw requirement must be >= 0");
  constexpr double kLargest = 4.5e15;
  const double clipped = std::min(std::ceil(raw), kLargest);
  std::size_t s = std::max(static_cast<std::size_t>(clipped), current);
  if (cap) s = std::min(s, *cap);
  return s;
}

}  // namespace adaprox
