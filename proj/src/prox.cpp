#include "adaprox/prox.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "adaprox/errors.hpp"

namespace adaprox {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dimension(Index expected, Index got, const char* what) {
  if (expected != got) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (expected " +
                        std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

}  // namespace

ProxFunction ProxFunction::zero(Index dimension) {
  if (dimension <= 0) throw ArgumentError("prox: dimension must be positive");
  return {h::Zero{}, dimension};
}

ProxFunction ProxFunction::l1(Index dimension, double weight) {
  if (dimension <= 0) throw ArgumentError("prox: dimension must be positive");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ArgumentError("prox: L1 weight must be finite and >= 0");
  }
  return {h::L1{weight}, dimension};
}

ProxFunction ProxFunction::halfspace(Vector normal, double offset) {
  const Index n = normal.size();
  if (n <= 0) throw ArgumentError("prox: halfspace normal must be non-empty");
  if (!normal.allFinite() || !std::isfinite(offset)) {
    throw ArgumentError("prox: halfspace data must be finite");
  }
  if (normal.squaredNorm() <= 0.0) throw ArgumentError("prox: halfspace normal must be nonzero");
  return {h::Halfspace{std::move(normal), offset}, n};
}

ProxFunction ProxFunction::box(Vector lo, Vector hi) {
  const Index n = lo.size();
  if (n <= 0) throw ArgumentError("prox: box must be non-empty");
  check_dimension(n, hi.size(), "prox box");
  for (Index i = 0; i < n; ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw ArgumentError("prox: box requires lo <= hi componentwise");
    }
  }
  return {h::Box{std::move(lo), std::move(hi)}, n};
}

ProxFunction ProxFunction::nonneg(Index dimension) {
  if (dimension <= 0) throw ArgumentError("prox: dimension must be positive");
  return {h::Nonneg{}, dimension};
}

std::string ProxFunction::name() const {
  return std::visit(Overloaded{[](const h::Zero&) { return std::string("zero"); },
                               [](const h::L1&) { return std::string("l1"); },
                               [](const h::Halfspace&) { return std::string("halfspace"); },
                               [](const h::Box&) { return std::string("box"); },
                               [](const h::Nonneg&) { return std::string("nonneg"); }},
                    kind_);
}

bool ProxFunction::is_identity() const noexcept {
  if (std::holds_alternative<h::Zero>(kind_)) return true;
  if (const auto* l1 = std::get_if<h::L1>(&kind_)) return l1->weight == 0.0;
  return false;
}

bool ProxFunction::is_indicator() const noexcept {
  return std::holds_alternative<h::Halfspace>(kind_) || std::holds_alternative<h::Box>(kind_) ||
         std::holds_alternative<h::Nonneg>(kind_);
}

double ProxFunction::evaluate(const Vector& x) const {
  check_dimension(dimension_, x.size(), "prox evaluate");
  return std::visit(
      Overloaded{[](const h::Zero&) { return 0.0; },
                 [&](const h::L1& l1) { return l1.weight * x.lpNorm<1>(); },
                 [&](const h::Halfspace& hs) { return hs.normal.dot(x) <= hs.offset ? 0.0 : kInf; },
                 [&](const h::Box& b) {
                   return ((x.array() >= b.lo.array()) && (x.array() <= b.hi.array())).all()
                              ? 0.0
                              : kInf;
                 },
                 [&](const h::Nonneg&) { return (x.array() >= 0.0).all() ? 0.0 : kInf; }},
      kind_);
}

Vector ProxFunction::prox(double alpha, const Vector& z) const {
  if (!(alpha > 0.0)) throw ArgumentError("prox: alpha must be positive");
  check_dimension(dimension_, z.size(), "prox");
  return std::visit(
      Overloaded{[&](const h::Zero&) -> Vector { return z; },
                 [&](const h::L1& l1) -> Vector {
                   const double t = alpha * l1.weight;
                   if (t == 0.0) return z;
                   Vector out(z.size());
                   for (Index i = 0; i < z.size(); ++i) {
                     const double mag = std::abs(z[i]) - t;
                     out[i] = mag > 0.0 ? std::copysign(mag, z[i]) : 0.0;
                   }
                   return out;
                 },
                 [&](const h::Halfspace& hs) -> Vector {
                   const double violation = hs.normal.dot(z) - hs.offset;
                   if (violation <= 0.0) return z;
                   Vector out = z - (violation / hs.normal.squaredNorm()) * hs.normal;
                   // Rounding can leave a^T out a few ulps above b; nudge inward.
                   double scale = 1.0;
                   for (int tries = 0; tries < 64; ++tries) {
                     const double excess = hs.normal.dot(out) - hs.offset;
                     if (excess <= 0.0) break;
                     out -= (scale * excess / hs.normal.squaredNorm()) * hs.normal;
                     scale *= 2.0;
                   }
                   return out;
                 },
                 [&](const h::Box& b) -> Vector { return z.cwiseMax(b.lo).cwiseMin(b.hi); },
                 [&](const h::Nonneg&) -> Vector { return z.cwiseMax(0.0); }},
      kind_);
}

namespace {

// Objective of the prox subproblem; written against evaluate() only.
double prox_objective(const ProxFunction& h, double alpha, const Vector& u, const Vector& z) {
  const double hv = h.evaluate(u);
  if (!std::isfinite(hv)) return kInf;
  return hv + (u - z).squaredNorm() / (2.0 * alpha);
}

bool separable(const ProxFunction& h) {
  return !std::holds_alternative<h::Halfspace>(h.kind());
}

}  // namespace

Vector prox_oracle(const ProxFunction& h, double alpha, const Vector& z, double grid_radius,
                   double grid_step) {
  const Index n = h.dimension();
  if (n > 3) throw UnsupportedError("prox_oracle: exhaustive search supports dimension <= 3");
  check_dimension(n, z.size(), "prox_oracle");
  if (!(alpha > 0.0)) throw ArgumentError("prox_oracle: alpha must be positive");
  if (!(grid_step > 0.0) || !(grid_radius > 0.0) || !(grid_step < grid_radius)) {
    throw ArgumentError("prox_oracle: need 0 < grid_step < grid_radius");
  }
  const long half = static_cast<long>(std::floor(grid_radius / grid_step));

  if (separable(h)) {
    // The objective splits over coordinates, so the argmin over the product
    // grid is the product of the per-axis argmins.
    Vector probe = Vector::Zero(n);
    if (std::holds_alternative<h::Box>(h.kind())) {
      const auto& b = std::get<h::Box>(h.kind());
      probe = (b.lo + b.hi) / 2.0;
    }
    Vector best = z;
    for (Index i = 0; i < n; ++i) {
      const double rest = probe[i];
      double best_val = kInf;
      double best_t = z[i];
      for (long j = -half; j <= half; ++j) {
        const double t = z[i] + static_cast<double>(j) * grid_step;
        probe[i] = t;
        const double hv = h.evaluate(probe);
        probe[i] = rest;
        if (!std::isfinite(hv)) continue;
        const double val = hv + (t - z[i]) * (t - z[i]) / (2.0 * alpha);
        if (val < best_val) {
          best_val = val;
          best_t = t;
        }
      }
      if (!std::isfinite(best_val)) throw ArgumentError("prox_oracle: no feasible grid point");
      best[i] = best_t;
    }
    return best;
  }

  Vector best = z;
  double best_val = kInf;
  Vector u(n);
  std::vector<long> idx(static_cast<std::size_t>(n), -half);
  while (true) {
    for (Index i = 0; i < n; ++i) u[i] = z[i] + static_cast<double>(idx[i]) * grid_step;
    const double val = prox_objective(h, alpha, u, z);
    if (val < best_val) {
      best_val = val;
      best = u;
    }
    Index d = 0;
    while (d < n && ++idx[d] > half) idx[d++] = -half;
    if (d == n) break;
  }
  if (!std::isfinite(best_val)) throw ArgumentError("prox_oracle: no feasible grid point");
  return best;
}

}  // namespace adaprox
