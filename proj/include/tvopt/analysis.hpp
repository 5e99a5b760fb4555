#ifndef TVOPT_ANALYSIS_HPP_
#define TVOPT_ANALYSIS_HPP_

/**
 * @file
 * @brief Closed-form convergence conditions and error bounds of the
 * prediction-correction scheme, and an empirical check of the Lipschitz
 * continuity of the tilted solution mapping.
 *
 * All zeta arguments are k-step factors zeta(k) including the
 * Douglas-Rachford prefactor (see RateEstimate::after).
 */

#include "tvopt/costs.hpp"
#include "tvopt/splitting.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace tvopt {

enum class Regime { Linear, Quadratic };

struct EtaCoefficients {
  double eta2 = 0.0;
  double eta1 = 0.0;
  double eta0 = 0.0;
  Regime regime = Regime::Linear;

  /// One step of e -> eta2 e^2 + eta1 e + eta0.
  double next(double e) const { return eta2 * e * e + eta1 * e + eta0; }
};

struct Theorem1Condition {
  double lhs = 0.0;
  bool holds = false;
};

/// zeta(C) [zeta(P) + (zeta(P) + 1) 2L/m] < 1.
inline Theorem1Condition theorem1_condition(double zetaP, double zetaC, double m, double L) {
  require_moduli(m, L);
  const double lhs = zetaC * (zetaP + (zetaP + 1.0) * 2.0 * L / m);
  return {lhs, lhs < 1.0};
}

inline EtaCoefficients eta_linear(double zetaP, double zetaC, double m, double L, double C0,
                                  double Ts) {
  require_moduli(m, L);
  if (zetaP < 0.0 || zetaC < 0.0 || C0 < 0.0 || Ts < 0.0) {
    throw ParameterError("eta_linear: inputs must be nonnegative");
  }
  EtaCoefficients e;
  e.regime = Regime::Linear;
  e.eta2 = 0.0;
  e.eta1 = zetaC * (zetaP + (zetaP + 1.0) * 2.0 * L / m);
  e.eta0 = zetaC * (2.0 * (zetaP + 1.0) * (1.0 + L / m) + zetaP) * C0 * Ts / m;
  return e;
}

inline EtaCoefficients eta_quadratic(double zetaP, double zetaC, double m,
                                     const DerivativeBounds& c, double Ts) {
  if (!(m > 0.0)) throw ParameterError("eta_quadratic: m must be positive");
  if (zetaP < 0.0 || zetaC < 0.0 || Ts < 0.0) {
    throw ParameterError("eta_quadratic: inputs must be nonnegative");
  }
  c.validate();
  const double m2 = m * m;
  const double m3 = m2 * m;
  EtaCoefficients e;
  e.regime = Regime::Quadratic;
  e.eta2 = zetaC * (zetaP + 1.0) * c.C1 / (2.0 * m);
  e.eta1 = zetaC * (zetaP + Ts * (zetaP + 1.0) * (c.C0 * c.C1 / m2 + c.C2 / m));
  e.eta0 = zetaC * (zetaP * Ts * c.C0 / m +
                    (zetaP + 1.0) * 0.5 * Ts * Ts *
                        (c.C0 * c.C0 * c.C1 / m3 + 2.0 * c.C0 * c.C2 / m2 + c.C3 / m));
  return e;
}

/// Sampling-time bound of the quadratic regime. +inf when the Taylor error
/// term C0 C1/m^2 + C2/m vanishes.
inline double ts_bar(double tau, double zetaP, double zetaC, double zetaPC, double m,
                     const DerivativeBounds& c) {
  if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("tau must lie in (0, 1)");
  if (!(m > 0.0)) throw ParameterError("ts_bar: m must be positive");
  if (!(zetaPC < tau)) {
    throw InfeasibleError("ts_bar: zeta(P+C) = " + std::to_string(zetaPC) +
                          " is not below tau = " + std::to_string(tau));
  }
  const double taylor = c.C0 * c.C1 / (m * m) + c.C2 / m;
  const double denom = zetaC * (zetaP + 1.0) * taylor;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return (tau - zetaPC) / denom;
}

/// Radius of the convergence region. +inf when C1 = 0.
inline double r_bar(double ts_bar_val, double Ts, double m, const DerivativeBounds& c) {
  if (!(m > 0.0)) throw ParameterError("r_bar: m must be positive");
  if (c.C1 == 0.0) return std::numeric_limits<double>::infinity();
  if (!(Ts <= ts_bar_val)) {
    throw InfeasibleError("r_bar: Ts = " + std::to_string(Ts) + " is not below the bound " +
                          std::to_string(ts_bar_val));
  }
  const double taylor = c.C0 * c.C1 / (m * m) + c.C2 / m;
  return 2.0 * m / c.C1 * taylor * (ts_bar_val - Ts);
}

/// e_0, e_1 = eta2 e_0^2 + eta1 e_0 + eta0, ... (steps + 1 values, unclamped).
inline std::vector<double> error_envelope(double e0, const EtaCoefficients& eta, int steps) {
  if (steps < 0) throw ParameterError("error_envelope: steps must be nonnegative");
  if (e0 < 0.0) throw ParameterError("error_envelope: e0 must be nonnegative");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(e0);
  for (int k = 0; k < steps; ++k) out.push_back(eta.next(out.back()));
  return out;
}

/// eta0/(1 - eta1), or +inf when eta1 >= 1.
inline double linear_asymptote(const EtaCoefficients& eta) {
  return eta.eta1 < 1.0 ? eta.eta0 / (1.0 - eta.eta1) : std::numeric_limits<double>::infinity();
}

struct ConvergenceReport {
  RateEstimate rate;
  double zetaP = 0.0;
  double zetaC = 0.0;
  double zetaPC = 0.0;
  double theorem1_lhs = 0.0;
  bool theorem1_holds = false;
  EtaCoefficients linear;
  EtaCoefficients quadratic;
  bool theorem2_feasible = false;
  double ts_bar = std::numeric_limits<double>::quiet_NaN();
  double r_bar = std::numeric_limits<double>::quiet_NaN();
  double asymptote_estimate = std::numeric_limits<double>::infinity();
  std::string theorem2_note;
};

/// Evaluates every bound for one configuration. An infeasible sampling-time bound is
/// reported in the result rather than thrown.
inline ConvergenceReport analyze(const SplitConfig& split, int P, int C, double Ts, double m,
                                 double L, const DerivativeBounds& bounds, double tau) {
  ConvergenceReport r;
  r.rate = contraction(split, m, L);
  r.zetaP = r.rate.after(P);
  r.zetaC = r.rate.after(C);
  r.zetaPC = r.rate.after(P + C);
  const Theorem1Condition t1 = theorem1_condition(r.zetaP, r.zetaC, m, L);
  r.theorem1_lhs = t1.lhs;
  r.theorem1_holds = t1.holds;
  r.linear = eta_linear(r.zetaP, r.zetaC, m, L, bounds.C0, Ts);
  r.quadratic = eta_quadratic(r.zetaP, r.zetaC, m, bounds, Ts);
  r.asymptote_estimate = linear_asymptote(r.linear);
  try {
    r.ts_bar = ts_bar(tau, r.zetaP, r.zetaC, r.zetaPC, m, bounds);
    r.r_bar = r_bar(r.ts_bar, Ts, m, bounds);
    r.theorem2_feasible = true;
  } catch (const InfeasibleError& e) {
    r.theorem2_feasible = false;
    r.theorem2_note = e.what();
  }
  return r;
}

// ---- solution mapping -------------------------------------------------------

struct LipschitzReport {
  double max_ratio = 0.0;
  double bound = 0.0;  // 1/m
  int pairs_checked = 0;
  int pairs_skipped = 0;
  bool holds = true;
  bool inconclusive = false;
  std::vector<Vector> solutions;
};

/**
 * @brief Minimizer of phi(y) + gamma(y) - <p, y> by forward-backward with the
 * balanced step. Returns nullopt when the fixed-point residual stays above
 * `residual_tol` after `iterations` steps.
 */
inline std::optional<Vector> tilted_solution(const SmoothCost& f, double t,
                                             const NonsmoothCost& g, const Vector& p,
                                             int iterations = 10000,
                                             double residual_tol = 1e-10) {
  const double rho = balanced_step(SplitMethod::ForwardBackward, f.m, f.L);
  Vector y = p;
  y.setZero();
  auto tilted_grad = [&](const Vector& x) -> Vector { return f.grad(x, t) - p; };
  for (int k = 0; k < iterations; ++k) y = g.prox(y - rho * tilted_grad(y), rho);
  const double res = (y - g.prox(y - rho * tilted_grad(y), rho)).norm();
  if (!(res <= residual_tol * std::max(1.0, y.norm()))) return std::nullopt;
  return y;
}

/// Checks ||S(p) - S(q)|| <= ||p - q||/m + tolerance over all pairs of tilts.
inline LipschitzReport solution_map_lipschitz_test(const SmoothCost& f, double t,
                                                   const NonsmoothCost& g,
                                                   std::span<const Vector> tilts,
                                                   double tolerance, int iterations = 10000) {
  f.validate_constants();
  LipschitzReport r;
  r.bound = 1.0 / f.m;
  r.solutions.reserve(tilts.size());
  for (const Vector& p : tilts) {
    auto s = tilted_solution(f, t, g, p, iterations);
    if (!s) {
      r.inconclusive = true;
      r.holds = false;
      return r;
    }
    r.solutions.push_back(std::move(*s));
  }
  for (std::size_t i = 0; i < tilts.size(); ++i) {
    for (std::size_t j = i + 1; j < tilts.size(); ++j) {
      const double dp = (tilts[i] - tilts[j]).norm();
      if (dp == 0.0) {
        ++r.pairs_skipped;
        continue;
      }
      const double ds = (r.solutions[i] - r.solutions[j]).norm();
      r.max_ratio = std::max(r.max_ratio, ds / dp);
      if (ds > r.bound * dp + tolerance) r.holds = false;
      ++r.pairs_checked;
    }
  }
  return r;
}

}  // namespace tvopt

#endif  // TVOPT_ANALYSIS_HPP_
