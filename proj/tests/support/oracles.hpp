// Test-only reference computations. Deliberately naive: they share nothing
// with the library beyond the problem and regularizer definitions.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;

/// Central differences with step h * max(1, |x_i|).
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    Vec up = x, down = x;
    up[i] += step;
    down[i] -= step;
    g[i] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

/// Calls visit(counts, probability) for every multiset of `batch` draws from
/// `pool` items under i.i.d. uniform sampling.
inline void for_each_multiset(std::size_t pool, std::size_t batch,
                              const std::function<void(const std::vector<std::size_t>&, double)>& visit) {
  std::vector<std::size_t> counts(pool, 0);
  const double log_total = std::lgamma(batch + 1.0) - batch * std::log(static_cast<double>(pool));
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t slot, std::size_t left, double lw) {
    if (slot + 1 == pool) {
      counts[slot] = left;
      visit(counts, std::exp(log_total + lw - std::lgamma(left + 1.0)));
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[slot] = c;
      rec(slot + 1, left - c, lw - std::lgamma(c + 1.0));
    }
  };
  rec(0, batch, 0.0);
}

/// Two-pass mean and sum of squared deviations of the columns of g.
inline std::pair<Vec, double> two_pass(const Eigen::MatrixXd& g) {
  const Vec mean = g.rowwise().mean();
  double ss = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j) ss += (g.col(j) - mean).squaredNorm();
  return {mean, ss};
}

/// argmin over a 2-d grid of f.
inline Vec grid_argmin_2d(const std::function<double(const Vec&)>& f, double lo, double hi, double step) {
  Vec best(2), x(2);
  double best_v = INFINITY;
  for (double a = lo; a <= hi; a += step) {
    for (double b = lo; b <= hi; b += step) {
      x << a, b;
      const double v = f(x);
      if (v < best_v) {
        best_v = v;
        best = x;
      }
    }
  }
  return best;
}

}  // namespace oracle
