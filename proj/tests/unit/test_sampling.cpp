#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "adaprox/errors.hpp"
#include "adaprox/problems.hpp"
#include "adaprox/rng.hpp"
#include "adaprox/sampling.hpp"

using namespace adaprox;

namespace {

const StochasticQuadratic& problem() {
  static const StochasticQuadratic q = StochasticQuadratic::random(5, 0.1, 1.0, 2.0, 40, 12);
  return q;
}

Vector point() { return Vector::LinSpaced(5, -1.0, 1.0); }

SamplingOptions retaining() {
  SamplingOptions o;
  o.retain_gradients = true;
  return o;
}

}  // namespace

TEST_CASE("rng streams are keyed and reproducible") {
  RngStream a(1, 2, 0), b(1, 2, 0), c(1, 2, 1), d(1, 3, 0);
  const auto first = a.next();
  CHECK(first == b.next());
  CHECK(first != c.next());
  CHECK(first != d.next());
  CHECK(a.position() == 1);
  // Frozen output of the (0, 0, 0) stream, computed outside the library.
  RngStream z(0, 0, 0);
  CHECK(z.next() == 0x41f7e87f80e64ff3ULL);
  CHECK(z.next() == 0x607f872ba8298913ULL);
}

TEST_CASE("uniform_index covers the range evenly") {
  RngStream rng(3, 0, 0);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_index(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 30.0);  // 6 dof; p ~ 4e-5
}

TEST_CASE("batch statistics match a two-pass computation") {
  RngStream rng(4, 0, 0);
  const GradientEstimate e = estimate(problem(), point(), 25, rng, retaining());
  REQUIRE(e.gradients);
  const auto [mean, ss] = oracle::two_pass(*e.gradients);
  CHECK((e.mean - mean).norm() <= 1e-12);
  CHECK(e.sum_sq_dev == doctest::Approx(ss).epsilon(1e-12));
  CHECK(sample_variance_total(e) == doctest::Approx(ss / 24.0).epsilon(1e-12));
  const Vector dir = Vector::Ones(5);
  double dv = 0.0;
  for (Index j = 0; j < e.gradients->cols(); ++j) dv += std::pow((e.gradients->col(j) - mean).dot(dir), 2);
  CHECK(sample_variance_directional(e, dir) == doctest::Approx(dv / 24.0).epsilon(1e-12));
}

TEST_CASE("estimate from ids agrees with component gradients") {
  const std::vector<std::size_t> ids = {3, 3, 0, 17, 39};
  const GradientEstimate e = estimate_from_ids(problem(), point(), ids);
  Vector sum = Vector::Zero(5), g(5);
  for (auto id : ids) {
    problem().component_gradient(point(), id, g);
    sum += g;
  }
  CHECK((e.mean - sum / 5.0).norm() <= 1e-14);
  CHECK(e.sample_ids == ids);
}

TEST_CASE("merge equals the concatenated batch") {
  const std::vector<std::size_t> a = {1, 2, 3, 5, 8}, b = {13, 21, 34};
  std::vector<std::size_t> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const auto ea = estimate_from_ids(problem(), point(), a, retaining());
  const auto eb = estimate_from_ids(problem(), point(), b, retaining());
  const auto eall = estimate_from_ids(problem(), point(), all, retaining());
  const auto m = merge(ea, eb);
  CHECK(m.batch_size == 8);
  CHECK((m.mean - eall.mean).norm() <= 1e-12);
  CHECK(m.sum_sq_dev == doctest::Approx(eall.sum_sq_dev).epsilon(1e-12));
  CHECK(m.sample_ids == all);
  REQUIRE(m.gradients);
  CHECK((*m.gradients - *eall.gradients).norm() == 0.0);
}

TEST_CASE("augmenting equals a fresh estimate over the same ids") {
  for (auto mode : {SamplingMode::kWithReplacement, SamplingMode::kWithoutReplacement}) {
    SamplingOptions o = retaining();
    o.mode = mode;
    RngStream r1(9, 1, 0), r2(9, 1, 1);
    const auto trial = estimate(problem(), point(), 6, r1, o);
    const auto grown = augment(trial, problem(), point(), 30, r2, o);
    CHECK(grown.batch_size == 30);
    CHECK(std::equal(trial.sample_ids.begin(), trial.sample_ids.end(), grown.sample_ids.begin()));
    const auto fresh = estimate_from_ids(problem(), point(), grown.sample_ids, o);
    CHECK((grown.mean - fresh.mean).norm() <= 1e-10);
    CHECK(std::abs(grown.sum_sq_dev - fresh.sum_sq_dev) <= 1e-10 * (1.0 + fresh.sum_sq_dev));
    if (mode == SamplingMode::kWithoutReplacement) {
      CHECK(std::set<std::size_t>(grown.sample_ids.begin(), grown.sample_ids.end()).size() == 30);
    }
  }
  RngStream r(1, 0, 0);
  const auto e = estimate(problem(), point(), 4, r);
  CHECK_THROWS_AS(augment(e, problem(), point(), 4, r), ArgumentError);
}

TEST_CASE("worker count does not change results") {
  std::vector<std::size_t> ids;
  RngStream rng(2, 0, 0);
  for (int i = 0; i < 1000; ++i) ids.push_back(rng.uniform_index(40));
  SamplingOptions one, four;
  four.workers = 4;
  const auto a = estimate_from_ids(problem(), point(), ids, one);
  const auto b = estimate_from_ids(problem(), point(), ids, four);
  CHECK(a.mean == b.mean);
  CHECK(a.sum_sq_dev == b.sum_sq_dev);
}

TEST_CASE("draw_ids") {
  RngStream rng(5, 0, 0);
  const auto ids = draw_ids(10, 10, rng, SamplingMode::kWithoutReplacement);
  CHECK(std::set<std::size_t>(ids.begin(), ids.end()).size() == 10);
  const std::vector<std::size_t> used = {0, 1, 2, 3};
  const auto rest = draw_ids(10, 6, rng, SamplingMode::kWithoutReplacement, used);
  for (auto id : rest) CHECK(id >= 4);
  CHECK_THROWS_AS(draw_ids(10, 7, rng, SamplingMode::kWithoutReplacement, used), ArgumentError);
  CHECK(draw_ids(3, 50, rng, SamplingMode::kWithReplacement).size() == 50);
  CHECK_THROWS_AS(draw_ids(0, 1, rng, SamplingMode::kWithReplacement), ArgumentError);
}

TEST_CASE("full population is the exact gradient") {
  const auto e = full_population(problem(), point());
  CHECK(e.full_population);
  CHECK(e.batch_size == 40);
  CHECK((e.mean - problem().exact_gradient(point())).norm() <= 1e-13);
  // Population variance with divisor P, sample variance with P - 1.
  CHECK(e.sum_sq_dev / 40.0 == doctest::Approx(problem().population_variance()).epsilon(1e-12));
}

TEST_CASE("degenerate inputs") {
  RngStream rng(1, 0, 0);
  CHECK_THROWS_AS(estimate(problem(), point(), 1, rng), ArgumentError);
  const auto e = estimate_from_ids(problem(), point(), std::vector<std::size_t>{1});
  CHECK_THROWS_AS(sample_variance_total(e), StateError);
  const auto nog = estimate_from_ids(problem(), point(), std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(sample_variance_directional(nog, Vector::Ones(5)), StateError);
  CHECK_THROWS_AS(estimate_from_ids(problem(), point(), std::vector<std::size_t>{40}), ArgumentError);
}
