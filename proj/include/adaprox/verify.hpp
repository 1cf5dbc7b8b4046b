#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaprox/problems.hpp"
#include "adaprox/prox.hpp"

namespace adaprox::verify {

/// Seed-averaged optimality gaps against a theoretical rate curve.
///
/// violation_ratio(k) = (mean_gap(k) - sigmas * stderr(k)) / bound(k);
/// pass <=> max over k of violation_ratio <= slack.
struct RateCheckReport {
  std::string controller;
  std::string rate;  // "linear" or "sublinear"
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> k;
  std::vector<double> mean_gap;
  std::vector<double> stderr_gap;
  std::vector<double> bound;
  double max_violation_ratio = 0.0;
  double slack = 1.1;
  double sigmas = 3.0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  double phi_star = 0.0;
  bool pass = false;

  std::string to_json() const;
};

struct RateCheckOptions {
  double slack = 1.1;
  double sigmas = 3.0;
  /// First k compared against the bound (sublinear checks start at 5).
  std::size_t first_k = 0;
};

/// Pool quadratic with L = 1 and mu = mu_over_L (0 gives a singular Q), and
/// a start point at `distance` from the minimum-norm minimizer.
struct RateInstance {
  StochasticQuadratic problem;
  Vector x0;
};

RateInstance make_rate_instance(double mu_over_L, std::uint64_t seed, Index dimension = 10, double sigma = 1.0,
                                std::size_t pool_size = 100, double distance = 10.0);

/// Runs the oracle-controlled solver with alpha = (1 - eta)/L from x0 for
/// `horizon` iterations per seed, h = Zero, and compares the seed-mean of
/// phi_k - phi* to (1 - (1 - eta) mu / L)^k (phi_0 - phi*).
RateCheckReport check_linear_rate(const StochasticQuadratic& p, const Vector& x0, double eta,
                                  const std::vector<std::uint64_t>& seeds, std::size_t horizon,
                                  const RateCheckOptions& opts = {});

/// Same protocol against L ||x0 - x*||^2 / (2 (1 - eta) k), x* the minimum-norm minimizer.
RateCheckReport check_sublinear_rate(const StochasticQuadratic& p, const Vector& x0, double eta,
                                     const std::vector<std::uint64_t>& seeds, std::size_t horizon,
                                     const RateCheckOptions& opts = {});

/// Both sides of the sufficient-decrease inequality and of the variance test,
/// computed by enumerating every multiset batch of size S from the pool.
struct EqTestReport {
  /// Var_k[g] and (eta/2) ||(E[x+] - x)/alpha||^2
  double variance = 0.0;
  double variance_bound = 0.0;
  /// alpha E[(grad f - g)^T (x+ - x)] and (eta/2) E||x+ - x||^2
  double lhs = 0.0;
  double rhs = 0.0;
  bool variance_test_holds = false;
  bool decrease_test_holds = false;
  /// variance_test_holds implies decrease_test_holds.
  bool implication_holds = false;
  std::size_t batches_enumerated = 0;
};

/// Exhaustive over multisets; throws UnsupportedError if the pool has more
/// than 12 vectors or there are more than 2e6 multisets.
EqTestReport check_eq_test_implied(const StochasticQuadratic& p, const ProxFunction& h, const Vector& x,
                                   double alpha, double eta, std::size_t batch);

/// Randomized small instances (d in {2,3}, pool of 3 to 6 vectors) over
/// every regularizer kind, each checked for batch sizes 1 to 4. Halfspace
/// instances put x on the boundary.
struct EqTestSuiteReport {
  std::size_t instances = 0;
  std::size_t cases = 0;
  std::size_t halfspace_instances = 0;
  /// Cases where the variance test held (the implication is non-vacuous there).
  std::size_t variance_test_held = 0;
  std::size_t implication_failures = 0;
  bool pass = false;

  std::string to_json() const;
};

EqTestSuiteReport run_eq_test_suite(std::size_t instances = 50, std::uint64_t seed = 1, double eta = 0.5);

struct Figure1Report {
  double distance = 0.0;
  double gradient_norm = 0.0;
  /// Composite-step rule: variance / ((eta/2) ||step/alpha||^2)
  double composite_requirement = 0.0;
  /// Unconstrained rule: variance / ((eta/2) ||grad f||^2)
  double naive_requirement = 0.0;
  double ratio = 0.0;
  /// Same ratio with the constraint dropped (should be 1).
  double unconstrained_ratio = 0.0;
};

/// Strongly convex quadratic in the plane with a single linear constraint whose
/// solution sits on the boundary; the iterate is placed on the boundary at
/// `distance` from the solution.
Figure1Report figure1_geometry(double distance, double eta = 0.9);

/// True when the gradient norm stays bounded below, the composite rule
/// exceeds the naive rule by >= 1e3 at distance 1e-3, the ratio grows as the
/// distance shrinks, and the rules coincide without the constraint.
bool check_figure1_phenomenon();

}  // namespace adaprox::verify
