#include <cmath>
#include <cstring>
#include <memory>

#include "doctest.h"

#include "adaprox/errors.hpp"
#include "adaprox/solver.hpp"

using namespace adaprox;

namespace {

const StochasticQuadratic& noisy() {
  static const StochasticQuadratic q = StochasticQuadratic::random(6, 0.1, 1.0, 1.0, 60, 5);
  return q;
}

std::shared_ptr<const LogisticL1> logistic() {
  static const auto p =
      std::make_shared<const LogisticL1>(std::make_shared<const Dataset>(synthetic_onehot(400, {3, 4, 5}, 3)));
  return p;
}

bool same_trace(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const RunRecord &x = a[i], &y = b[i];
    const bool eq = x.iteration == y.iteration && x.batch_size == y.batch_size &&
                    x.cumulative_samples == y.cumulative_samples &&
                    std::memcmp(&x.phi, &y.phi, sizeof(double)) == 0 &&
                    std::memcmp(&x.step_norm_over_alpha, &y.step_norm_over_alpha, sizeof(double)) == 0 &&
                    x.resampled == y.resampled;
    if (!eq) return false;
  }
  return true;
}

SolverConfig base_config(ControllerConfig c, double alpha = 0.5) {
  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.controller = c;
  cfg.max_epochs = 30;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("fixed seed replays bit for bit") {
  for (ControllerConfig c : {ControllerConfig{control::Norm{0.5}, {}}, ControllerConfig{control::InnerProduct{0.9}, {}},
                             ControllerConfig{control::Geometric{2, 0.2}, {}}}) {
    const ProxFunction h = ProxFunction::l1(6, 0.01);
    const auto a = solve(noisy(), h, base_config(c), Vector::Ones(6));
    const auto b = solve(noisy(), h, base_config(c), Vector::Ones(6));
    CHECK(same_trace(a.trace, b.trace));
    CHECK(a.x == b.x);
    auto other = base_config(c);
    other.seed = 43;
    CHECK_FALSE(same_trace(a.trace, solve(noisy(), h, other, Vector::Ones(6)).trace));
  }
}

TEST_CASE("batch sizes never decrease and reach N under a tight test") {
  const auto p = logistic();
  const ProxFunction h = p->regularizer();
  for (ControllerConfig c : {ControllerConfig{control::Norm{0.1}, {}}, ControllerConfig{control::InnerProduct{0.5}, {}},
                             ControllerConfig{control::Geometric{2, 0.5}, {}}}) {
    auto cfg = base_config(c, 1.0);
    cfg.max_epochs = 40;
    const auto run = solve(*p, h, cfg, Vector::Zero(p->dimension()));
    for (std::size_t i = 1; i < run.trace.size(); ++i) CHECK(run.trace[i].batch_size >= run.trace[i - 1].batch_size);
    CHECK(run.trace.back().batch_size <= 400);
    if (c.method() != "IP") CHECK(run.trace.back().batch_size == 400);
  }
}

TEST_CASE("committed step equals the trial step when the batch is kept") {
  ControllerConfig c{control::Norm{0.9}, {}};
  const auto run = solve(noisy(), ProxFunction::nonneg(6), base_config(c), Vector::Ones(6));
  std::size_t kept = 0, grown = 0;
  for (std::size_t i = 1; i < run.trace.size(); ++i) {
    const RunRecord& r = run.trace[i];
    if (r.resampled) {
      ++grown;
      CHECK(r.batch_size > run.trace[i - 1].batch_size);
    } else {
      ++kept;
      CHECK(r.step_norm_over_alpha == r.trial_step_norm_over_alpha);
      CHECK(r.batch_size == run.trace[i - 1].batch_size);
    }
  }
  CHECK(kept > 0);
  CHECK(grown > 0);
}

TEST_CASE("geometric batches follow the schedule") {
  ControllerConfig c{control::Geometric{2, 0.1}, {}};
  auto cfg = base_config(c);
  cfg.max_iterations = 40;
  const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
  // Record k carries the batch that produced x_k, i.e. S_{k-1}.
  for (const RunRecord& r : run.trace) {
    if (r.iteration == 0) continue;
    const double expected = std::ceil(2.0 * std::pow(1.1, double(r.iteration - 1)));
    CHECK(double(r.batch_size) == expected);
  }
  CHECK(run.reason == Termination::kIterationLimit);
}

TEST_CASE("sample accounting") {
  ControllerConfig c{control::Norm{0.5}, {}};
  auto cfg = base_config(c);
  cfg.max_iterations = 25;
  const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
  // Each iteration draws S_{k-1} trial samples plus S_k - S_{k-1} more when grown.
  std::uint64_t expected = 0;
  for (std::size_t i = 1; i < run.trace.size(); ++i) {
    expected += run.trace[i - 1].batch_size;
    if (run.trace[i].resampled) expected += run.trace[i].batch_size - run.trace[i - 1].batch_size;
    CHECK(run.trace[i].cumulative_samples == expected);
    CHECK(run.trace[i].effective_gradient_evaluations == doctest::Approx(expected / 60.0));
  }
  // Full re-sampling redraws all S_k samples instead of S_k - S_{k-1}.
  cfg.resample_all = true;
  const auto full = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
  expected = 0;
  for (std::size_t i = 1; i < full.trace.size(); ++i) {
    expected += full.trace[i - 1].batch_size;
    if (full.trace[i].resampled) expected += full.trace[i].batch_size;
    CHECK(full.trace[i].cumulative_samples == expected);
  }
}

TEST_CASE("termination rules") {
  Matrix qm = Matrix::Identity(3, 3);
  qm(0, 0) = 10.0;
  const StochasticQuadratic quiet(qm, Vector::Ones(3), Matrix::Zero(3, 4));
  ControllerConfig c{control::Norm{0.9}, {}};
  SUBCASE("step tolerance") {
    auto cfg = base_config(c, 0.1);
    cfg.max_epochs = 1e6;
    const auto run = solve(quiet, ProxFunction::zero(3), cfg, Vector::Zero(3));
    CHECK(run.reason == Termination::kStepTolerance);
    CHECK(run.trace.back().step_norm_over_alpha <= 1e-8);
  }
  SUBCASE("epoch budget") {
    auto cfg = base_config(c, 0.01);
    cfg.step_tolerance = 0.0;
    cfg.max_epochs = 3;
    const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
    CHECK(run.reason == Termination::kSampleBudget);
    CHECK(run.cumulative_samples <= 3u * 60u);
  }
  SUBCASE("budget holds when batches outgrow the pool") {
    for (const ControllerConfig& tight : {ControllerConfig{control::Norm{0.1}, {}},
                                          ControllerConfig{control::Geometric{2, 0.5}, {}}}) {
      auto cfg = base_config(tight, 0.5);
      cfg.step_tolerance = 0.0;
      cfg.max_epochs = 20;
      const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
      CHECK(run.reason == Termination::kSampleBudget);
      CHECK(run.cumulative_samples <= 20u * 60u);
      CHECK(run.trace.back().cumulative_samples == run.cumulative_samples);
    }
  }
  SUBCASE("iteration limit") {
    auto cfg = base_config(c);
    cfg.max_iterations = 3;
    const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
    CHECK(run.iterations == 3);
    CHECK(run.trace.size() == 4);
  }
}

TEST_CASE("recording cadence") {
  ControllerConfig c{control::Norm{0.9}, {}};
  auto cfg = base_config(c);
  cfg.max_iterations = 50;
  cfg.max_epochs = 1e6;
  cfg.record_every = 10;
  const auto run = solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6));
  CHECK(run.trace.front().iteration == 0);
  CHECK(run.trace.back().iteration == 50);
  for (const auto& r : run.trace) CHECK(r.iteration % 10 == 0);
  CHECK(std::isnan(run.trace.front().phi_gap));
  cfg.phi_star = 0.0;
  CHECK(solve(noisy(), ProxFunction::zero(6), cfg, Vector::Ones(6)).trace.back().phi_gap ==
        doctest::Approx(run.trace.back().phi));
}

TEST_CASE("steplength resolution and argument checks") {
  SolverConfig cfg;
  cfg.alpha = TheoryStep{0.5};
  CHECK(resolve_alpha(cfg, noisy()) == doctest::Approx(0.5 / *noisy().lipschitz()));
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(resolve_alpha(cfg, noisy()), ArgumentError);
  cfg.alpha = 0.5;
  CHECK_THROWS_AS(solve(noisy(), ProxFunction::nonneg(6), cfg, -Vector::Ones(6)), ArgumentError);
  CHECK_THROWS_AS(solve(noisy(), ProxFunction::zero(5), cfg, Vector::Ones(6)), ArgumentError);
  cfg.controller.kind = control::OracleNorm{0.5};
  const auto p = logistic();
  CHECK_THROWS_AS(solve(*p, p->regularizer(), cfg, Vector::Zero(p->dimension())), UnsupportedError);
}

TEST_CASE("deterministic solver") {
  const ProxFunction h = ProxFunction::zero(6);
  DeterministicOptions opts;
  opts.record_phi = true;
  const auto run = solve_deterministic(noisy(), h, 1.0, 200, Vector::Ones(6), opts);
  for (std::size_t i = 1; i < run.phi.size(); ++i) CHECK(run.phi[i] <= run.phi[i - 1] + 1e-15);
  CHECK_THROWS_AS(solve_deterministic(noisy(), h, 5.0, 1000, Vector::Ones(6)), DivergenceError);
}
