#include "adaprox/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>

#include "adaprox/errors.hpp"

namespace adaprox {
namespace {

constexpr std::size_t kBlock = 256;

// Fills columns of `out` with the gradients of ids[first, first + count).
void evaluate_block(const StochasticProblem& p, const Vector& x, std::span<const std::size_t> ids,
                    Eigen::Ref<Matrix> out, unsigned workers) {
  const auto count = static_cast<std::size_t>(out.cols());
  if (workers <= 1 || count < 2 * workers) {
    for (std::size_t j = 0; j < count; ++j) p.component_gradient(x, ids[j], out.col(static_cast<Index>(j)));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t j = lo; j < hi; ++j) {
        p.component_gradient(x, ids[j], out.col(static_cast<Index>(j)));
      }
    });
  }
  for (auto& t : pool) t.join();
}

void check_ids(const StochasticProblem& p, std::span<const std::size_t> ids) {
  const auto n = p.sample_space_size();
  if (!n) return;
  for (std::size_t id : ids) {
    if (id >= *n) throw ArgumentError("sample id " + std::to_string(id) + " out of range");
  }
}

}  // namespace

std::vector<std::size_t> draw_ids(std::size_t n, std::size_t count, RngStream& rng, SamplingMode mode,
                                  std::span<const std::size_t> exclude) {
  if (n == 0) throw ArgumentError("draw_ids: empty sample space");
  std::vector<std::size_t> ids;
  ids.reserve(count);
  if (mode == SamplingMode::kWithReplacement) {
    for (std::size_t i = 0; i < count; ++i) ids.push_back(rng.uniform_index(n));
    return ids;
  }
  std::unordered_set<std::size_t> taken(exclude.begin(), exclude.end());
  if (taken.size() + count > n) {
    throw ArgumentError("draw_ids: not enough distinct ids left to sample without replacement");
  }
  if (count * 4 < n - taken.size()) {
    while (ids.size() < count) {
      const std::size_t id = rng.uniform_index(n);
      if (taken.insert(id).second) ids.push_back(id);
    }
    return ids;
  }
  // Dense regime: partial Fisher-Yates over the remaining ids.
  std::vector<std::size_t> remaining;
  remaining.reserve(n - taken.size());
  for (std::size_t id = 0; id < n; ++id)
    if (!taken.count(id)) remaining.push_back(id);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(remaining.size() - i);
    std::swap(remaining[i], remaining[j]);
    ids.push_back(remaining[i]);
  }
  return ids;
}

GradientEstimate estimate_from_ids(const StochasticProblem& p, const Vector& x,
                                   std::span<const std::size_t> ids, const SamplingOptions& opts) {
  if (ids.empty()) throw ArgumentError("batch gradient: empty batch");
  if (x.size() != p.dimension()) throw ArgumentError("batch gradient: dimension mismatch");
  check_ids(p, ids);
  const Index d = p.dimension();
  const std::size_t total = ids.size();

  GradientEstimate e;
  e.mean = Vector::Zero(d);
  e.batch_size = total;
  e.sample_ids.assign(ids.begin(), ids.end());
  if (opts.retain_gradients) e.gradients.emplace(d, static_cast<Index>(total));

  Matrix scratch;
  if (!opts.retain_gradients) scratch.resize(d, static_cast<Index>(std::min(total, kBlock)));
  Vector delta(d);
  std::size_t n = 0;
  for (std::size_t first = 0; first < total; first += kBlock) {
    const std::size_t count = std::min(kBlock, total - first);
    auto block = opts.retain_gradients
                     ? e.gradients->middleCols(static_cast<Index>(first), static_cast<Index>(count))
                     : scratch.leftCols(static_cast<Index>(count));
    evaluate_block(p, x, ids.subspan(first, count), block, opts.workers);
    // Ordered Welford combine.
    for (std::size_t j = 0; j < count; ++j) {
      const auto g = block.col(static_cast<Index>(j));
      ++n;
      delta = g - e.mean;
      e.mean += delta / static_cast<double>(n);
      e.sum_sq_dev += delta.dot(g - e.mean);
    }
  }
  if (!e.mean.allFinite() || !std::isfinite(e.sum_sq_dev)) {
    throw NumericalError("non-finite component gradient", 0);
  }
  return e;
}

GradientEstimate estimate(const StochasticProblem& p, const Vector& x, std::size_t batch_size,
                          RngStream& rng, const SamplingOptions& opts) {
  if (batch_size < 2) throw ArgumentError("estimate: batch size must be >= 2");
  const auto n = p.sample_space_size();
  if (!n) throw UnsupportedError("estimate: continuous sample spaces are not supported");
  const auto ids = draw_ids(*n, batch_size, rng, opts.mode);
  return estimate_from_ids(p, x, ids, opts);
}

GradientEstimate full_population(const StochasticProblem& p, const Vector& x,
                                 const SamplingOptions& opts) {
  const auto n = p.sample_space_size();
  if (!n) throw UnsupportedError("full_population: sample space is not enumerable");
  std::vector<std::size_t> ids(*n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  GradientEstimate e = estimate_from_ids(p, x, ids, opts);
  e.full_population = true;
  return e;
}

double sample_variance_total(const GradientEstimate& e) {
  if (e.batch_size < 2) throw StateError("sample variance needs at least two samples");
  return e.sum_sq_dev / static_cast<double>(e.batch_size - 1);
}

double sample_variance_directional(const GradientEstimate& e, const Vector& d) {
  if (!e.gradients) throw StateError("directional variance needs retained per-sample gradients");
  if (e.batch_size < 2) throw StateError("sample variance needs at least two samples");
  if (d.size() != e.mean.size()) throw ArgumentError("directional variance: dimension mismatch");
  const Vector proj = e.gradients->transpose() * d;
  const double centre = e.mean.dot(d);
  return (proj.array() - centre).square().sum() / static_cast<double>(e.batch_size - 1);
}

GradientEstimate merge(const GradientEstimate& first, const GradientEstimate& second) {
  if (first.batch_size == 0) return second;
  if (second.batch_size == 0) return first;
  if (first.mean.size() != second.mean.size()) throw ArgumentError("merge: dimension mismatch");
  const auto na = static_cast<double>(first.batch_size);
  const auto nb = static_cast<double>(second.batch_size);
  const double n = na + nb;

  GradientEstimate out;
  const Vector delta = second.mean - first.mean;
  out.mean = first.mean + delta * (nb / n);
  out.sum_sq_dev = first.sum_sq_dev + second.sum_sq_dev + delta.squaredNorm() * (na * nb / n);
  out.batch_size = first.batch_size + second.batch_size;
  out.sample_ids = first.sample_ids;
  out.sample_ids.insert(out.sample_ids.end(), second.sample_ids.begin(), second.sample_ids.end());
  if (first.gradients && second.gradients) {
    out.gradients.emplace(first.gradients->rows(), first.gradients->cols() + second.gradients->cols());
    *out.gradients << *first.gradients, *second.gradients;
  }
  return out;
}

GradientEstimate augment(const GradientEstimate& e, const StochasticProblem& p, const Vector& x,
                         std::size_t target, RngStream& rng, const SamplingOptions& opts) {
  if (target <= e.batch_size) throw ArgumentError("augment: target must exceed the current batch size");
  const auto n = p.sample_space_size();
  if (!n) throw UnsupportedError("augment: continuous sample spaces are not supported");
  const auto ids = draw_ids(*n, target - e.batch_size, rng, opts.mode, e.sample_ids);
  SamplingOptions extra = opts;
  extra.retain_gradients = opts.retain_gradients && e.gradients.has_value();
  return merge(e, estimate_from_ids(p, x, ids, extra));
}

}  // namespace adaprox
