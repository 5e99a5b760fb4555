#ifndef TVOPT_TRAJECTORY_HPP_
#define TVOPT_TRAJECTORY_HPP_

#include "tvopt/types.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace tvopt {

/// Per-step output of an online run. Entry k refers to t_k, k = 1..K.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vector> predictions;
  std::vector<Vector> iterates;
  std::vector<Vector> oracle_optima;
  std::vector<double> errors;  // E_k = ||x_k - x*_k||
  std::vector<double> pred_residuals;
  std::vector<double> corr_residuals;
  double initial_error = 0.0;  // E_0
  double duration = 0.0;
  double asymptotic_error = 0.0;

  std::size_t size() const { return times.size(); }
};

/// max E_k over t_k > 2 D / 3; NaN when no sample falls in that window.
inline double asymptotic_error(std::span<const double> times, std::span<const double> errors,
                               double duration) {
  const double start = 2.0 * duration / 3.0;
  double best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] > start) best = std::isnan(best) ? errors[k] : std::max(best, errors[k]);
  }
  return best;
}

/// Number of sampling periods in `duration` (rounded down, tolerant of
/// representation error such as 100/0.1).
inline int step_count(double duration, double Ts) {
  if (!(Ts > 0.0)) throw ParameterError("Ts must be positive");
  if (!(duration >= 0.0)) throw ParameterError("duration must be nonnegative");
  return static_cast<int>(std::floor(duration / Ts + 1e-9));
}

/// Least-squares slope of log(err) against log(Ts); nullopt with fewer than
/// two distinct abscissae or non-positive values.
inline std::optional<double> loglog_slope(std::span<const double> ts,
                                          std::span<const double> errors) {
  if (ts.size() != errors.size() || ts.size() < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0) || !(errors[i] > 0.0)) return std::nullopt;
    sx += std::log(ts[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dx = std::log(ts[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace tvopt

#endif  // TVOPT_TRAJECTORY_HPP_
