#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

namespace adaprox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace h {

struct Zero {};

/// weight * ||x||_1
struct L1 {
  double weight = 0.0;
};

/// Indicator of { x : a^T x <= b }.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// Indicator of { x : lo <= x <= hi }.
struct Box {
  Vector lo;
  Vector hi;
};

/// Indicator of the nonnegative orthant.
struct Nonneg {};

}  // namespace h

/// The convex term of a composite objective: value and proximal map.
///
/// Instances are immutable once built; all members are const and reentrant.
class ProxFunction {
 public:
  using Kind = std::variant<h::Zero, h::L1, h::Halfspace, h::Box, h::Nonneg>;

  static ProxFunction zero(Index dimension);
  static ProxFunction l1(Index dimension, double weight);
  static ProxFunction halfspace(Vector normal, double offset);
  static ProxFunction box(Vector lo, Vector hi);
  static ProxFunction nonneg(Index dimension);

  Index dimension() const noexcept { return dimension_; }
  const Kind& kind() const noexcept { return kind_; }

  /// Short kind name: "zero", "l1", "halfspace", "box", "nonneg".
  std::string name() const;

  /// True when prox is the identity map (Zero, or L1 with weight 0).
  bool is_identity() const noexcept;

  /// True for the indicator kinds.
  bool is_indicator() const noexcept;

  /// h(x), +infinity outside an indicator's set. Membership is tested exactly.
  double evaluate(const Vector& x) const;

  /// argmin_u h(u) + ||u - z||^2 / (2 alpha).
  Vector prox(double alpha, const Vector& z) const;

 private:
  ProxFunction(Kind kind, Index dimension) : kind_(std::move(kind)), dimension_(dimension) {}

  Kind kind_;
  Index dimension_;
};

/// Brute-force minimizer of h(u) + ||u - z||^2 / (2 alpha) over the grid
/// z + grid_step * Z^n intersected with the cube of half-width grid_radius.
/// Only for dimension <= 3; used to cross-check prox().
Vector prox_oracle(const ProxFunction& h, double alpha, const Vector& z, double grid_radius,
                   double grid_step);

}  // namespace adaprox
