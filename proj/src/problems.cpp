#include "adaprox/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "adaprox/errors.hpp"
#include "adaprox/rng.hpp"
#include "adaprox/solver.hpp"

namespace adaprox {

std::size_t StochasticProblem::epoch_size() const {
  const auto n = sample_space_size();
  return n ? *n : 1;
}

double softplus(double t) noexcept {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

namespace {

// sigma(t) = 1 / (1 + exp(-t)), evaluated without overflow.
double logistic_sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- quadratic

StochasticQuadratic::StochasticQuadratic(Matrix q, Vector b, Matrix noise_pool)
    : q_(std::move(q)), b_(std::move(b)), pool_(std::move(noise_pool)) {
  const Index d = b_.size();
  if (d <= 0) throw ArgumentError("quadratic: dimension must be positive");
  if (q_.rows() != d || q_.cols() != d) throw ArgumentError("quadratic: Q must be d x d");
  if (pool_.rows() != d || pool_.cols() < 1) {
    throw ArgumentError("quadratic: noise pool must be d x P with P >= 1");
  }
  if (!q_.isApprox(q_.transpose(), 1e-12)) throw ArgumentError("quadratic: Q must be symmetric");
  q_ = (0.5 * (q_ + q_.transpose())).eval();

  const Vector centre = pool_.rowwise().mean();
  pool_.colwise() -= centre;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
  mu_ = eig.eigenvalues().minCoeff();
  lipschitz_ = eig.eigenvalues().maxCoeff();
  const double tiny = 1e-12 * std::max(1.0, lipschitz_);
  if (mu_ < -tiny) throw ArgumentError("quadratic: Q must be positive semidefinite");
  if (!(lipschitz_ > 0.0)) throw ArgumentError("quadratic: Q must be nonzero");
  if (std::abs(mu_) <= tiny) mu_ = 0.0;
  population_variance_ = pool_.colwise().squaredNorm().mean();
}

StochasticQuadratic StochasticQuadratic::random(Index dimension, double mu, double lipschitz,
                                                double sigma, std::size_t pool_size,
                                                std::uint64_t seed) {
  if (dimension < 1) throw ArgumentError("quadratic: dimension must be positive");
  if (!(lipschitz > 0.0) || mu < 0.0 || mu > lipschitz) {
    throw ArgumentError("quadratic: need 0 <= mu <= L, L > 0");
  }
  if (sigma < 0.0) throw ArgumentError("quadratic: sigma must be >= 0");
  if (pool_size < 1) throw ArgumentError("quadratic: pool size must be >= 1");

  RngStream rng(seed, 0, 0x9a11);
  Vector eigenvalues(dimension);
  if (mu > 0.0) {
    eigenvalues[0] = mu;
    eigenvalues[dimension - 1] = lipschitz;
    for (Index i = 1; i + 1 < dimension; ++i) {
      eigenvalues[i] = mu * std::pow(lipschitz / mu, rng.uniform());
    }
  } else {
    eigenvalues[0] = 0.0;
    eigenvalues[dimension - 1] = lipschitz;
    for (Index i = 1; i + 1 < dimension; ++i) {
      eigenvalues[i] = lipschitz * std::pow(10.0, -rng.uniform());
    }
  }
  if (dimension == 1) eigenvalues[0] = mu > 0.0 ? mu : lipschitz;

  Matrix gauss(dimension, dimension);
  for (Index j = 0; j < dimension; ++j)
    for (Index i = 0; i < dimension; ++i) gauss(i, j) = rng.normal();
  const Matrix basis = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  const Matrix q = basis * eigenvalues.asDiagonal() * basis.transpose();

  Vector w(dimension);
  for (Index i = 0; i < dimension; ++i) w[i] = rng.normal();
  // b in range(Q) keeps f bounded below when Q is singular.
  const Vector b = q * w;

  Matrix pool(dimension, static_cast<Index>(pool_size));
  for (Index j = 0; j < pool.cols(); ++j)
    for (Index i = 0; i < dimension; ++i) pool(i, j) = sigma * rng.normal();
  return StochasticQuadratic(q, b, pool);
}

double StochasticQuadratic::component_value(const Vector& x, std::size_t id) const {
  return exact_value(x) + pool_.col(static_cast<Index>(id)).dot(x);
}

void StochasticQuadratic::component_gradient(const Vector& x, std::size_t id,
                                             Eigen::Ref<Vector> out) const {
  out.noalias() = q_ * x;
  out += b_ + pool_.col(static_cast<Index>(id));
}

double StochasticQuadratic::exact_value(const Vector& x) const {
  return 0.5 * x.dot(q_ * x) + b_.dot(x);
}

Vector StochasticQuadratic::exact_gradient(const Vector& x) const { return q_ * x + b_; }

std::string StochasticQuadratic::describe() const {
  std::ostringstream os;
  os << "quadratic(d=" << dimension() << ", mu=" << mu_ << ", L=" << lipschitz_
     << ", pool=" << pool_.cols() << ", popvar=" << population_variance_ << ")";
  return os.str();
}

Vector StochasticQuadratic::unconstrained_minimizer() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_);
  const double cutoff = 1e-12 * lipschitz_;
  const Vector rhs = eig.eigenvectors().transpose() * (-b_);
  Vector coeffs(rhs.size());
  for (Index i = 0; i < rhs.size(); ++i) {
    const double lam = eig.eigenvalues()[i];
    coeffs[i] = lam > cutoff ? rhs[i] / lam : 0.0;
  }
  return eig.eigenvectors() * coeffs;
}

// ----------------------------------------------------------------- logistic

LogisticL1::LogisticL1(std::shared_ptr<const Dataset> data, std::optional<double> lambda)
    : data_(std::move(data)) {
  if (!data_ || data_->rows() < 1 || data_->cols() < 1) {
    throw ArgumentError("logistic: dataset must be non-empty");
  }
  lambda_ = lambda ? *lambda : 1.0 / static_cast<double>(data_->rows());
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw ArgumentError("logistic: lambda must be finite and >= 0");
  }
  lipschitz_ = lipschitz_estimate(*data_);
}

double LogisticL1::component_value(const Vector& x, std::size_t id) const {
  const auto row = static_cast<Index>(id);
  const double margin = data_->labels[row] * data_->features.row(row).dot(x);
  return softplus(-margin);
}

void LogisticL1::component_gradient(const Vector& x, std::size_t id, Eigen::Ref<Vector> out) const {
  const auto row = static_cast<Index>(id);
  const double y = data_->labels[row];
  const double margin = y * data_->features.row(row).dot(x);
  const double scale = -y * logistic_sigmoid(-margin);
  out.setZero();
  for (SparseRows::InnerIterator it(data_->features, row); it; ++it) {
    out[it.index()] = scale * it.value();
  }
}

double LogisticL1::exact_value(const Vector& x) const {
  const Vector margins = data_->labels.cwiseProduct(data_->features * x);
  double total = 0.0;
  for (Index i = 0; i < margins.size(); ++i) total += softplus(-margins[i]);
  return total / static_cast<double>(margins.size());
}

Vector LogisticL1::exact_gradient(const Vector& x) const {
  return exact_value_and_gradient(x).second;
}

std::pair<double, Vector> LogisticL1::exact_value_and_gradient(const Vector& x) const {
  const Index n = data_->rows();
  const Vector margins = data_->labels.cwiseProduct(data_->features * x);
  Vector weights(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    total += softplus(-margins[i]);
    weights[i] = -data_->labels[i] * logistic_sigmoid(-margins[i]);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector grad = (data_->features.transpose() * weights) * inv_n;
  return {total * inv_n, std::move(grad)};
}

std::string LogisticL1::describe() const {
  std::ostringstream os;
  os << "logistic(" << data_->name << ", N=" << data_->rows() << ", d=" << data_->cols()
     << ", lambda=" << lambda_ << ", L=" << lipschitz_ << ")";
  return os.str();
}

double lipschitz_estimate(const Dataset& data) {
  const SparseRows& z = data.features;
  if (z.nonZeros() == 0 || z.coeffs().cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateDataError("lipschitz_estimate: feature matrix is all zero");
  }
  // Start from a fixed positive vector with distinct entries so it is not
  // orthogonal to the leading eigenvector of a nonnegative Z^T Z.
  Vector v(z.cols());
  for (Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.5 * std::sin(static_cast<double>(j) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector w = z.transpose() * (z * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    const bool converged = it > 0 && std::abs(next - lambda) <= 1e-3 * std::abs(next);
    lambda = next;
    if (converged) break;
  }
  return lambda / (4.0 * static_cast<double>(z.rows()));
}

double exact_phi(const StochasticProblem& p, const ProxFunction& h, const Vector& x) {
  if (x.size() != p.dimension() || h.dimension() != p.dimension()) {
    throw ArgumentError("exact_phi: dimension mismatch");
  }
  const double hv = h.evaluate(x);
  if (!std::isfinite(hv)) return hv;
  return p.exact_value(x) + hv;
}

ReferenceSolution reference_solution(const StochasticProblem& p, const ProxFunction& h, double alpha,
                                     std::size_t iters, const Vector& x0) {
  DeterministicOptions opts;
  opts.keep_best = true;
  const DeterministicResult run = solve_deterministic(p, h, alpha, iters, x0, opts);
  ReferenceSolution out;
  out.x = run.best_x;
  out.phi_star = run.best_phi;
  out.alpha = alpha;
  out.iterations = run.iterations;
  return out;
}

}  // namespace adaprox
