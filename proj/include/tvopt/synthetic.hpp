#ifndef TVOPT_SYNTHETIC_HPP_
#define TVOPT_SYNTHETIC_HPP_

#include "tvopt/costs.hpp"
#include "tvopt/engine.hpp"
#include "tvopt/trajectory.hpp"

#include <cmath>

namespace tvopt {

/// f(x;t) = 0.5 ||x - r(t)||^2 with r(t) = a sin(w t) 1, g = 0. The optimum is
/// r(t) and every derivative bound is analytic: C1 = C2 = 0,
/// C0 = a w sqrt(n), C3 = a w^2 sqrt(n).
struct SyntheticSinusoid {
  double amplitude = 1.0;
  double omega = 1.0;
  int dimension = 4;

  void validate() const {
    if (dimension < 1) throw ParameterError("synthetic dimension must be at least 1");
    if (!std::isfinite(amplitude) || !(omega >= 0.0)) {
      throw ParameterError("synthetic amplitude must be finite and omega nonnegative");
    }
  }

  Vector optimum(double t) const {
    return Vector::Constant(dimension, amplitude * std::sin(omega * t));
  }

  SmoothCost cost() const {
    validate();
    const SyntheticSinusoid s = *this;
    SmoothCost f;
    f.grad = [s](const Vector& x, double t) { return (x - s.optimum(t)).eval(); };
    f.hessian = [s](const Vector&, double) { return Matrix::Identity(s.dimension, s.dimension).eval(); };
    f.grad_time = [s](const Vector&, double t) {
      return Vector::Constant(s.dimension, -s.amplitude * s.omega * std::cos(s.omega * t)).eval();
    };
    f.exact_prox = [s](const Vector& v, double t, double rho) {
      return ((v + rho * s.optimum(t)) / (1.0 + rho)).eval();
    };
    f.value = [s](const Vector& x, double t) { return 0.5 * (x - s.optimum(t)).squaredNorm(); };
    f.m = 1.0;
    f.L = 1.0;
    return f;
  }

  DerivativeBounds bounds() const {
    const double rn = std::sqrt(static_cast<double>(dimension));
    return {std::abs(amplitude) * omega * rn, 0.0, 0.0, std::abs(amplitude) * omega * omega * rn};
  }
};

/// Online run from x0 = 0 at t = 0; E_k against the closed-form optimum.
inline TrajectoryRecord run_synthetic(const SyntheticSinusoid& problem, const PCConfig& cfg,
                                      double duration) {
  const int K = step_count(duration, cfg.Ts);
  const Vector x0 = Vector::Zero(problem.dimension);
  const auto steps = run_online(problem.cost(), zero_cost(), x0, 0.0, K, cfg);
  TrajectoryRecord rec;
  rec.duration = duration;
  rec.initial_error = (x0 - problem.optimum(0.0)).norm();
  for (const StepRecord& s : steps) {
    Vector opt = problem.optimum(s.t);
    rec.times.push_back(s.t);
    rec.errors.push_back((s.x_corr - opt).norm());
    rec.pred_residuals.push_back(s.pred_residual);
    rec.corr_residuals.push_back(s.corr_residual);
    rec.predictions.push_back(s.x_pred);
    rec.iterates.push_back(s.x_corr);
    rec.oracle_optima.push_back(std::move(opt));
  }
  rec.asymptotic_error = asymptotic_error(rec.times, rec.errors, duration);
  return rec;
}

}  // namespace tvopt

#endif  // TVOPT_SYNTHETIC_HPP_
