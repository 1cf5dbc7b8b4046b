#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "adaprox/data.hpp"
#include "adaprox/prox.hpp"

namespace adaprox {

/// f(x) = E_theta[F(x, theta)] over a finite, enumerable sample space.
///
/// Sample ids run over [0, sample_space_size()). All members are const and
/// may be called concurrently.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual Index dimension() const = 0;

  /// Number of distinct sample ids; nullopt for a continuous distribution.
  virtual std::optional<std::size_t> sample_space_size() const = 0;

  /// True when f is an average over a fixed dataset (batches saturate at N).
  /// False for noise models, where batches may exceed the pool size.
  virtual bool finite_sum() const = 0;

  virtual double component_value(const Vector& x, std::size_t id) const = 0;
  virtual void component_gradient(const Vector& x, std::size_t id, Eigen::Ref<Vector> out) const = 0;

  virtual double exact_value(const Vector& x) const = 0;
  virtual Vector exact_gradient(const Vector& x) const = 0;

  /// f(x) and grad f(x) in one pass; override when that is cheaper.
  virtual std::pair<double, Vector> exact_value_and_gradient(const Vector& x) const {
    return {exact_value(x), exact_gradient(x)};
  }

  /// Lipschitz constant of grad f, when known.
  virtual std::optional<double> lipschitz() const { return std::nullopt; }
  virtual std::optional<double> strong_convexity() const { return std::nullopt; }

  virtual std::string describe() const = 0;

  /// Sample count that makes up one epoch (N for datasets, pool size otherwise).
  std::size_t epoch_size() const;
};

/// f(x) = 1/2 x^T Q x + b^T x with per-sample gradient Qx + b + zeta_i, where
/// the zeta_i form a finite mean-centered pool, so E[zeta] = 0 exactly and the
/// population variance E||zeta||^2 is known in closed form.
class StochasticQuadratic final : public StochasticProblem {
 public:
  /// `noise_pool` is d x P; its column mean is subtracted on construction.
  StochasticQuadratic(Matrix q, Vector b, Matrix noise_pool);

  /// Random instance: eigenvalues spread log-uniformly in [mu, L] (mu = 0
  /// gives a singular Q with one zero eigenvalue, the rest in [L/10, L]),
  /// random orthogonal eigenbasis, pool of `pool_size` N(0, sigma^2 I) draws.
  static StochasticQuadratic random(Index dimension, double mu, double lipschitz, double sigma,
                                    std::size_t pool_size, std::uint64_t seed);

  Index dimension() const override { return b_.size(); }
  std::optional<std::size_t> sample_space_size() const override {
    return static_cast<std::size_t>(pool_.cols());
  }
  bool finite_sum() const override { return false; }

  double component_value(const Vector& x, std::size_t id) const override;
  void component_gradient(const Vector& x, std::size_t id, Eigen::Ref<Vector> out) const override;
  double exact_value(const Vector& x) const override;
  Vector exact_gradient(const Vector& x) const override;
  std::optional<double> lipschitz() const override { return lipschitz_; }
  std::optional<double> strong_convexity() const override { return mu_; }
  std::string describe() const override;

  const Matrix& q() const noexcept { return q_; }
  const Vector& b() const noexcept { return b_; }
  const Matrix& pool() const noexcept { return pool_; }
  std::size_t pool_size() const noexcept { return static_cast<std::size_t>(pool_.cols()); }

  /// E||grad F(x, theta) - grad f(x)||^2 = (1/P) sum ||zeta_i||^2; independent of x.
  double population_variance() const noexcept { return population_variance_; }

  /// Minimum-norm minimizer of f (Q^+ applied to -b).
  Vector unconstrained_minimizer() const;

 private:
  Matrix q_;
  Vector b_;
  Matrix pool_;
  double mu_ = 0.0;
  double lipschitz_ = 0.0;
  double population_variance_ = 0.0;
};

/// Logistic loss F(x, i) = log(1 + exp(-y_i z_i^T x)); the l1 term lives in a
/// ProxFunction built by regularizer().
class LogisticL1 final : public StochasticProblem {
 public:
  /// lambda defaults to 1/N.
  explicit LogisticL1(std::shared_ptr<const Dataset> data, std::optional<double> lambda = std::nullopt);

  Index dimension() const override { return data_->cols(); }
  std::optional<std::size_t> sample_space_size() const override {
    return static_cast<std::size_t>(data_->rows());
  }
  bool finite_sum() const override { return true; }

  double component_value(const Vector& x, std::size_t id) const override;
  void component_gradient(const Vector& x, std::size_t id, Eigen::Ref<Vector> out) const override;
  double exact_value(const Vector& x) const override;
  Vector exact_gradient(const Vector& x) const override;
  std::pair<double, Vector> exact_value_and_gradient(const Vector& x) const override;
  std::optional<double> lipschitz() const override { return lipschitz_; }
  std::string describe() const override;

  double lambda() const noexcept { return lambda_; }
  const Dataset& data() const noexcept { return *data_; }
  ProxFunction regularizer() const { return ProxFunction::l1(dimension(), lambda_); }

 private:
  std::shared_ptr<const Dataset> data_;
  double lambda_;
  double lipschitz_;
};

/// log(1 + exp(t)) without overflow.
double softplus(double t) noexcept;

/// lambda_max(Z^T Z) / (4N) by power iteration (relative tolerance 1e-3, at
/// most 500 iterations). Throws DegenerateDataError for an all-zero Z.
double lipschitz_estimate(const Dataset& data);

/// f(x) + h(x); +infinity when h(x) is.
double exact_phi(const StochasticProblem& p, const ProxFunction& h, const Vector& x);

struct ReferenceSolution {
  Vector x;
  double phi_star = 0.0;
  double alpha = 0.0;
  std::size_t iterations = 0;
};

/// Deterministic proximal gradient from x0 for `iters` steps; phi_star is the
/// smallest phi seen over all iterates and x the iterate attaining it.
ReferenceSolution reference_solution(const StochasticProblem& p, const ProxFunction& h, double alpha,
                                     std::size_t iters, const Vector& x0);

}  // namespace adaprox
