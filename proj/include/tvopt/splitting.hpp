#ifndef TVOPT_SPLITTING_HPP_
#define TVOPT_SPLITTING_HPP_

/**
 * @file
 * @brief Forward-backward and Douglas-Rachford splitting of phi + gamma,
 * with phi = f(.;t) frozen at a sampling instant, and their closed-form
 * contraction rates.
 */

#include "tvopt/costs.hpp"

#include <cmath>
#include <optional>
#include <string_view>

namespace tvopt {

enum class SplitMethod { ForwardBackward, DouglasRachford };

inline std::string_view to_string(SplitMethod m) {
  return m == SplitMethod::ForwardBackward ? "ForwardBackward" : "DouglasRachford";
}

struct SplitConfig {
  SplitMethod method = SplitMethod::ForwardBackward;
  double rho = 0.0;

  /// Throws StepSizeError unless rho > 0 (and rho < 2/L for forward-backward).
  void validate(double L) const {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw StepSizeError("step-size rho must be positive (got " + std::to_string(rho) + ")");
    }
    if (method == SplitMethod::ForwardBackward && !(rho < 2.0 / L)) {
      throw StepSizeError("forward-backward requires rho < 2/L = " + std::to_string(2.0 / L) +
                          " (got " + std::to_string(rho) + ")");
    }
  }
};

/// Iterate of a splitting. For Douglas-Rachford `z` is the auxiliary variable
/// and x = prox_{rho phi}(z); `y` is the point returned by the last gamma-prox.
struct SplitState {
  Vector x;
  std::optional<Vector> z;
  std::optional<Vector> y;
};

/// Per-step rate zeta and the multiplier of the k-step bound.
struct RateEstimate {
  double zeta = 1.0;
  double prefactor = 1.0;

  /// zeta(k) = zeta^k * prefactor; the prefactor is applied once.
  double after(int steps) const { return std::pow(zeta, steps) * prefactor; }
};

inline void require_moduli(double m, double L) {
  if (!(m > 0.0) || !(L >= m) || !std::isfinite(L)) {
    throw ParameterError("rates require 0 < m <= L (got m=" + std::to_string(m) +
                         ", L=" + std::to_string(L) + ")");
  }
}

/// zeta_FB = max{|1 - rho m|, |1 - rho L|}.
inline RateEstimate contraction_fb(double rho, double m, double L) {
  require_moduli(m, L);
  SplitConfig{SplitMethod::ForwardBackward, rho}.validate(L);
  return {std::max(std::abs(1.0 - rho * m), std::abs(1.0 - rho * L)), 1.0};
}

/// zeta_DR = max{1/(1 + rho m), rho L/(1 + rho L)}, prefactor (1 + rho L)/(1 + rho m).
inline RateEstimate contraction_dr(double rho, double m, double L) {
  require_moduli(m, L);
  SplitConfig{SplitMethod::DouglasRachford, rho}.validate(L);
  return {std::max(1.0 / (1.0 + rho * m), rho * L / (1.0 + rho * L)),
          (1.0 + rho * L) / (1.0 + rho * m)};
}

inline RateEstimate contraction(const SplitConfig& cfg, double m, double L) {
  return cfg.method == SplitMethod::ForwardBackward ? contraction_fb(cfg.rho, m, L)
                                                    : contraction_dr(cfg.rho, m, L);
}

/// Step-size minimizing the per-step rate: 2/(m+L) for FB, 1/sqrt(mL) for DR.
inline double balanced_step(SplitMethod method, double m, double L) {
  require_moduli(m, L);
  return method == SplitMethod::ForwardBackward ? 2.0 / (m + L) : 1.0 / std::sqrt(m * L);
}

/// x' = prox_{rho gamma}(x - rho grad phi(x)).
inline Vector fb_step(const Vector& x, const SmoothCost& f, double t, const NonsmoothCost& g,
                      double rho) {
  return g.prox(x - rho * f.grad(x, t), rho);
}

struct DrStep {
  Vector x;       // prox_{rho phi}(z)
  Vector y;       // prox_{rho gamma}(2x - z)
  Vector z_next;  // z + y - x
};

inline DrStep dr_step(const Vector& z, const SmoothCost& f, double t, const NonsmoothCost& g,
                      double rho) {
  if (!f.has_exact_prox()) {
    throw CapabilityError(
        "Douglas-Rachford needs an exact prox of the smooth cost; use a quadratic model "
        "(QuadraticCost::smooth) or forward-backward");
  }
  DrStep s;
  s.x = f.exact_prox(z, t, rho);
  s.y = g.prox(2.0 * s.x - z, rho);
  s.z_next = z + s.y - s.x;
  return s;
}

/// Douglas-Rachford start from a primal point: z0 = x_init, x = prox_{rho phi}(z0).
inline SplitState dr_start(const Vector& x_init, const SmoothCost& f, double t, double rho) {
  if (!f.has_exact_prox()) {
    throw CapabilityError(
        "Douglas-Rachford needs an exact prox of the smooth cost; use a quadratic model "
        "(QuadraticCost::smooth) or forward-backward");
  }
  SplitState s;
  s.x = f.exact_prox(x_init, t, rho);
  s.z = x_init;
  return s;
}

/**
 * @brief Applies `steps` iterations of the configured splitting to phi + gamma.
 *
 * For Douglas-Rachford a state without `z` is started with z = state.x. After
 * every step the returned state satisfies x = prox_{rho phi}(z) and carries
 * the last gamma-prox point in `y`. steps == 0 returns `initial` unchanged.
 */
inline SplitState banach_picard(SplitState initial, const SmoothCost& f, double t,
                                const NonsmoothCost& g, const SplitConfig& cfg, int steps) {
  if (steps < 0) throw ParameterError("banach_picard: steps must be nonnegative");
  if (steps == 0) return initial;
  cfg.validate(f.L);
  if (cfg.method == SplitMethod::ForwardBackward) {
    Vector x = std::move(initial.x);
    for (int k = 0; k < steps; ++k) x = fb_step(x, f, t, g, cfg.rho);
    initial.y = x;
    initial.x = std::move(x);
    return initial;
  }
  Vector z = initial.z ? std::move(*initial.z) : initial.x;
  Vector y;
  for (int k = 0; k < steps; ++k) {
    DrStep s = dr_step(z, f, t, g, cfg.rho);
    y = std::move(s.y);
    z = std::move(s.z_next);
  }
  SplitState out;
  out.x = f.exact_prox(z, t, cfg.rho);
  out.z = std::move(z);
  out.y = std::move(y);
  return out;
}

/// ||x - prox_{rho gamma}(x - rho grad phi(x))||; zero exactly at the minimizer.
inline double fixed_point_residual(const Vector& x, const SmoothCost& f, double t,
                                   const NonsmoothCost& g, double rho) {
  return (x - fb_step(x, f, t, g, rho)).norm();
}

}  // namespace tvopt

#endif  // TVOPT_SPLITTING_HPP_
