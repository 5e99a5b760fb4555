#ifndef TVOPT_ENGINE_HPP_
#define TVOPT_ENGINE_HPP_

/**
 * @file
 * @brief Online prediction-correction loop.
 *
 * At t_k the gradient of f(.;t_{k+1}) is approximated by the first-order
 * Taylor model
 *
 *   grad h_k(x) = grad_x f(x_k;t_k) + H_k (x - x_k) + Ts * grad_tx f(x_k;t_k),
 *
 * with H_k = grad_xx f(x_k;t_k). P splitting steps on h_k + g started at x_k
 * give the prediction; once f(.;t_{k+1}) is observed, C splitting steps on
 * f(.;t_{k+1}) + g started at the prediction give x_{k+1}.
 */

#include "tvopt/costs.hpp"
#include "tvopt/splitting.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tvopt {

enum class DerivativeMode { Analytic, BackwardDifference };

inline std::string_view to_string(DerivativeMode m) {
  return m == DerivativeMode::Analytic ? "Analytic" : "BackwardDifference";
}

/// Which Douglas-Rachford point a phase hands on: the last gamma-prox point
/// y (feasible for indicators) or the primal x = prox_{rho phi}(z).
enum class DrOutput { Feasible, Primal };

struct PCConfig {
  int P = 0;
  int C = 1;
  double Ts = 0.1;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;
  SplitConfig split;
  DrOutput dr_output = DrOutput::Feasible;

  void validate() const {
    if (P < 0) throw ParameterError("P must be nonnegative (got " + std::to_string(P) + ")");
    if (C < 1) throw ParameterError("C must be at least 1 (got " + std::to_string(C) + ")");
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
      throw ParameterError("Ts must be positive (got " + std::to_string(Ts) + ")");
    }
  }
};

struct OnlineState {
  int k = 0;
  Vector x;
  std::optional<Vector> prev_grad;  // grad_x f(x_k; t_{k-1})
};

struct StepRecord {
  double t = 0.0;  // t_{k+1}
  Vector x_pred;
  Vector x_corr;
  double pred_residual = 0.0;
  double corr_residual = 0.0;
};

/// Raised by run_online when step `step` fails; wraps the original message.
class StepError : public Error {
 public:
  StepError(int step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

inline Vector backward_difference_grad_time(const Vector& grad_now, const Vector& grad_prev,
                                            double Ts) {
  if (!(Ts > 0.0)) throw ParameterError("backward difference requires Ts > 0");
  require_same_size(grad_now, grad_prev, "backward difference");
  return (grad_now - grad_prev) / Ts;
}

/**
 * @brief Quadratic prediction model h_k of f(.;t_k + Ts) around (x_k, t_k).
 *
 * In BackwardDifference mode the time term uses `prev_grad`
 * (= grad_x f(x_k;t_{k-1})); without it the term is zero (first step).
 * The model inherits the declared m, L of f.
 */
inline QuadraticCost build_prediction_cost(const SmoothCost& f, const Vector& x_k, double t_k,
                                           double Ts, DerivativeMode mode,
                                           const std::optional<Vector>& prev_grad = std::nullopt) {
  f.validate_constants();
  const Vector grad = f.grad(x_k, t_k);
  Matrix H = f.hessian(x_k, t_k);
  H = 0.5 * (H + H.transpose()).eval();
  Vector q = grad - H * x_k;
  if (mode == DerivativeMode::Analytic) {
    if (!f.has_grad_time()) {
      throw CapabilityError(
          "Analytic derivative mode needs grad_time on the smooth cost; use BackwardDifference");
    }
    q += Ts * f.grad_time(x_k, t_k);
  } else if (prev_grad) {
    q += grad - *prev_grad;  // Ts * (grad - prev)/Ts
  }
  return QuadraticCost(std::move(H), std::move(q), f.m, f.L);
}

/// Runs `steps` iterations from x_init and returns the point handed to the
/// next phase. steps == 0 returns x_init.
inline Vector run_phase(const Vector& x_init, const SmoothCost& f, double t,
                        const NonsmoothCost& g, const PCConfig& cfg, int steps) {
  if (steps == 0) return x_init;
  SplitState s = banach_picard(SplitState{x_init, std::nullopt, std::nullopt}, f, t, g, cfg.split,
                               steps);
  if (cfg.split.method == SplitMethod::DouglasRachford && cfg.dr_output == DrOutput::Feasible) {
    return std::move(*s.y);
  }
  return std::move(s.x);
}

inline void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) throw Error(std::string(what) + " is not finite (diverged or overflowed)");
}

struct Prediction {
  QuadraticCost model;
  Vector x;
};

inline Prediction predict(const OnlineState& state, const SmoothCost& f, const NonsmoothCost& g,
                          const PCConfig& cfg, double t_k) {
  const std::optional<Vector>& prev =
      cfg.derivative_mode == DerivativeMode::BackwardDifference ? state.prev_grad : std::nullopt;
  Prediction out{build_prediction_cost(f, state.x, t_k, cfg.Ts, cfg.derivative_mode, prev),
                 Vector()};
  if (cfg.P == 0) {
    out.x = state.x;
  } else {
    out.x = run_phase(state.x, out.model.smooth(), t_k, g, cfg, cfg.P);
  }
  return out;
}

/// C splitting steps on f(.;t_next) + g started at the prediction.
inline Vector correct(const Vector& x_pred, const SmoothCost& f, double t_next,
                      const NonsmoothCost& g, const PCConfig& cfg) {
  if (cfg.C < 1) throw ParameterError("C must be at least 1");
  return run_phase(x_pred, f, t_next, g, cfg, cfg.C);
}

/**
 * @brief Algorithm loop for k = 0 .. horizon-1 on a cost known as a function
 * of time. Record k holds the prediction and correction for t_{k+1}.
 */
inline std::vector<StepRecord> run_online(const SmoothCost& f, const NonsmoothCost& g,
                                          const Vector& x0, double t0, int horizon,
                                          const PCConfig& cfg) {
  cfg.validate();
  if (horizon < 0) throw ParameterError("horizon must be nonnegative");
  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(horizon));
  OnlineState state{0, x0, std::nullopt};
  for (int k = 0; k < horizon; ++k) {
    try {
      const double t_k = t0 + k * cfg.Ts;
      const double t_next = t0 + (k + 1) * cfg.Ts;
      Prediction pred = predict(state, f, g, cfg, t_k);
      StepRecord rec;
      rec.t = t_next;
      rec.pred_residual =
          fixed_point_residual(pred.x, pred.model.smooth(), t_k, g, cfg.split.rho);
      rec.x_corr = correct(pred.x, f, t_next, g, cfg);
      require_finite(rec.x_corr, "corrected iterate");
      rec.corr_residual = fixed_point_residual(rec.x_corr, f, t_next, g, cfg.split.rho);
      rec.x_pred = std::move(pred.x);
      state.k = k + 1;
      state.x = rec.x_corr;
      if (cfg.derivative_mode == DerivativeMode::BackwardDifference) {
        state.prev_grad = f.grad(state.x, t_k);
      }
      records.push_back(std::move(rec));
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
  }
  return records;
}

}  // namespace tvopt

#endif  // TVOPT_ENGINE_HPP_
