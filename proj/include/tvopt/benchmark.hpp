#ifndef TVOPT_BENCHMARK_HPP_
#define TVOPT_BENCHMARK_HPP_

/**
 * @file
 * @brief Leader-following formation benchmark.
 *
 * State x = [x^0; x^1; ...; x^N] in R^{2(N+1)} (leader first). Follower i
 * observes z^i = v_i' x^0 + n^i along one axis. At every sampling instant
 * the fusion center minimizes
 *
 *   f(x) = sum_i 0.5 (z^i - v_i' x^0)^2 + 0.5 lambda ||x - x_prev||^2
 *
 * subject to the rigid formation x^i - x^0 = d (cos th_i, sin th_i),
 * th_i = 2 pi (i-1)/N, where x_prev is the algorithm's previous iterate.
 */

#include "tvopt/costs.hpp"
#include "tvopt/engine.hpp"
#include "tvopt/trajectory.hpp"

#include <array>
#include <cstdint>
#include <future>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace tvopt {

enum class Axis { X, Y };

struct LissajousSpec {
  double amplitude = 3.0;
  std::array<int, 2> ratio{1, 3};
  double period = 40.0;
  double phase = std::numbers::pi / 2.0;

  double omega() const { return 2.0 * std::numbers::pi / period; }
  void validate() const {
    if (!(period > 0.0)) throw ParameterError("Lissajous period must be positive");
  }
};

/// (A sin(a w t), A sin(b w t + phase)) for ratio a:b.
inline Eigen::Vector2d leader_position(const LissajousSpec& s, double t) {
  const double w = s.omega();
  return {s.amplitude * std::sin(s.ratio[0] * w * t),
          s.amplitude * std::sin(s.ratio[1] * w * t + s.phase)};
}

inline Eigen::Vector2d leader_velocity(const LissajousSpec& s, double t) {
  const double w = s.omega();
  const double a = s.ratio[0] * w;
  const double b = s.ratio[1] * w;
  return {s.amplitude * a * std::cos(a * t), s.amplitude * b * std::cos(b * t + s.phase)};
}

struct FormationSpec {
  int N = 10;
  double d = 1.0;
  double lambda = 10.0;
  std::vector<double> sigmas = std::vector<double>(10, 0.1);
  std::vector<Axis> directions = default_directions(10);
  LissajousSpec leader;
  std::uint64_t seed = 1;

  int dim() const { return 2 * (N + 1); }

  /// First round(0.6 N) followers measure x, the rest y (6/4 for N = 10).
  static std::vector<Axis> default_directions(int N) {
    std::vector<Axis> dirs(static_cast<std::size_t>(std::max(N, 0)), Axis::Y);
    const int nx = std::max(1, static_cast<int>(std::lround(0.6 * N)));
    for (int i = 0; i < std::min(nx, N); ++i) dirs[static_cast<std::size_t>(i)] = Axis::X;
    return dirs;
  }

  void validate() const {
    if (N < 1) throw ParameterError("formation needs N >= 1 followers");
    if (!(d > 0.0)) throw ParameterError("formation radius d must be positive");
    if (!(lambda > 0.0)) throw ParameterError("regularization lambda must be positive");
    if (sigmas.size() != static_cast<std::size_t>(N)) {
      throw ParameterError("sigmas must have N = " + std::to_string(N) + " entries");
    }
    for (double s : sigmas) {
      if (!(s >= 0.0)) throw ParameterError("noise std must be nonnegative");
    }
    if (directions.size() != static_cast<std::size_t>(N)) {
      throw ParameterError("directions must have N = " + std::to_string(N) + " entries");
    }
    bool has_x = false, has_y = false;
    for (Axis a : directions) (a == Axis::X ? has_x : has_y) = true;
    if (!has_x || !has_y) {
      throw ParameterError("directions must include both axes for the leader to be observable");
    }
    leader.validate();
  }
};

/// Block rows [-I ... I ...] and b_i = d (cos th_i, sin th_i).
inline std::pair<Matrix, Vector> formation_constraints(int N, double d) {
  if (N < 1) throw ParameterError("formation_constraints: N must be at least 1");
  Matrix A = Matrix::Zero(2 * N, 2 * (N + 1));
  Vector b(2 * N);
  for (int i = 1; i <= N; ++i) {
    const int row = 2 * (i - 1);
    A.block(row, 0, 2, 2) = -Matrix::Identity(2, 2);
    A.block(row, 2 * i, 2, 2) = Matrix::Identity(2, 2);
    const double th = 2.0 * std::numbers::pi * (i - 1) / N;
    b[row] = d * std::cos(th);
    b[row + 1] = d * std::sin(th);
  }
  return {std::move(A), std::move(b)};
}

/// N x 2 matrix whose rows are the unit measurement directions v_i'.
inline Matrix measurement_matrix(const std::vector<Axis>& directions) {
  Matrix V = Matrix::Zero(static_cast<Eigen::Index>(directions.size()), 2);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    V(static_cast<Eigen::Index>(i), directions[i] == Axis::X ? 0 : 1) = 1.0;
  }
  return V;
}

/**
 * @brief z^i = v_i' leader + n^i, n^i ~ N(0, sigma_i).
 *
 * The noise of step `step` comes from a generator seeded by (seed, step), so
 * every step is reproducible on its own and runs never share a stream.
 */
inline Vector sample_measurements(const FormationSpec& spec, const Eigen::Vector2d& leader,
                                  std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(spec.N);
  for (int i = 0; i < spec.N; ++i) {
    const double clean =
        spec.directions[static_cast<std::size_t>(i)] == Axis::X ? leader[0] : leader[1];
    z[i] = clean + spec.sigmas[static_cast<std::size_t>(i)] * normal(gen);
  }
  return z;
}

/// Equality-constrained minimizer of 0.5 x'Qx + q'x s.t. Ax = b via one
/// dense KKT solve.
inline Vector oracle_solution(const QuadraticCost& cost, const Matrix& A, const Vector& b) {
  const Eigen::Index n = cost.dim();
  const Eigen::Index p = A.rows();
  if (p > 0 && A.cols() != n) throw DimensionError("oracle_solution: A has wrong column count");
  Matrix K = Matrix::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = cost.Q();
  if (p > 0) {
    K.topRightCorner(n, p) = A.transpose();
    K.bottomLeftCorner(p, n) = A;
  }
  Vector rhs(n + p);
  rhs.head(n) = -cost.q();
  if (p > 0) rhs.tail(p) = b;
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw SingularityError("oracle_solution: KKT matrix is singular");
  const Vector sol = lu.solve(rhs);
  return sol.head(n);
}

/**
 * @brief The formation problem with its constant parts precomputed: the
 * Hessian, (m, L), the projector onto Ax = b and the KKT factorization.
 */
class FormationProblem {
 public:
  explicit FormationProblem(FormationSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    auto [A, b] = formation_constraints(spec_.N, spec_.d);
    A_ = std::move(A);
    b_ = std::move(b);
    V_ = measurement_matrix(spec_.directions);
    const int n = spec_.dim();
    Q_ = spec_.lambda * Matrix::Identity(n, n);
    Q_.topLeftCorner(2, 2) += V_.transpose() * V_;
    const QuadraticCost probe = build_quadratic(Q_, Vector::Zero(n));
    m_ = probe.m();
    L_ = probe.L();
    g_ = affine_indicator(A_, b_);
    Matrix K = Matrix::Zero(n + A_.rows(), n + A_.rows());
    K.topLeftCorner(n, n) = Q_;
    K.topRightCorner(n, A_.rows()) = A_.transpose();
    K.bottomLeftCorner(A_.rows(), n) = A_;
    kkt_.compute(K);
    if (!kkt_.isInvertible()) throw SingularityError("formation KKT matrix is singular");
  }

  const FormationSpec& spec() const { return spec_; }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  const Matrix& hessian() const { return Q_; }
  const NonsmoothCost& constraint() const { return g_; }
  double m() const { return m_; }
  double L() const { return L_; }
  int dim() const { return spec_.dim(); }

  /// Cost of one sampling instant given measurements z and anchor x_prev.
  QuadraticCost build_step_cost(const Vector& z, const Vector& x_prev) const {
    if (z.size() != spec_.N) throw DimensionError("build_step_cost: expected N measurements");
    require_same_size(x_prev, Vector::Zero(dim()), "build_step_cost anchor");
    Vector q = -spec_.lambda * x_prev;
    q.head(2) -= V_.transpose() * z;
    return QuadraticCost(Q_, std::move(q), m_, L_);
  }

  /// KKT solve using the cached factorization.
  Vector oracle(const QuadraticCost& cost) const {
    const Eigen::Index n = dim();
    Vector rhs(n + A_.rows());
    rhs.head(n) = -cost.q();
    rhs.tail(A_.rows()) = b_;
    const Vector sol = kkt_.solve(rhs);
    return sol.head(n);
  }

  Vector measurements(double t0, double Ts, std::uint64_t step) const {
    return sample_measurements(spec_, leader_position(spec_.leader, t0 + step * Ts), step);
  }

  /**
   * @brief f(x;t) with a fixed anchor, as a function of time: the
   * measurements are held at the sample nearest to t, and the analytic time
   * derivative of the gradient is -[V'V dx^0/dt; 0] (noise has no derivative).
   */
  SmoothCost time_varying_cost(const Vector& anchor, double t0, double Ts) const {
    auto self = std::make_shared<const FormationProblem>(*this);
    auto sample = [self, anchor, t0, Ts](double t) {
      const double idx = std::round((t - t0) / Ts);
      if (idx < 0.0) throw ParameterError("formation cost queried before t0");
      const auto step = static_cast<std::uint64_t>(idx);
      return self->build_step_cost(self->measurements(t0, Ts, step), anchor);
    };
    SmoothCost f;
    f.grad = [sample](const Vector& x, double t) { return sample(t).gradient(x); };
    f.hessian = [self](const Vector&, double) { return self->hessian(); };
    f.grad_time = [self](const Vector&, double t) {
      Vector gt = Vector::Zero(self->dim());
      gt.head(2) = -(self->V_.transpose() * self->V_) * leader_velocity(self->spec_.leader, t);
      return gt;
    };
    f.exact_prox = [sample](const Vector& v, double t, double rho) {
      return sample(t).prox(v, rho);
    };
    f.value = [sample](const Vector& x, double t) { return sample(t).value(x); };
    f.m = m_;
    f.L = L_;
    return f;
  }

  /// Bounds for the analysis: C1 = C2 = 0 (quadratic, time-invariant
  /// Hessian); C0, C3 from the peak leader velocity and acceleration.
  DerivativeBounds derivative_bounds() const {
    const Matrix M = V_.transpose() * V_;
    const auto& s = spec_.leader;
    const double a = s.ratio[0] * s.omega();
    const double b = s.ratio[1] * s.omega();
    const Eigen::Vector2d vel(s.amplitude * a, s.amplitude * b);
    const Eigen::Vector2d acc(s.amplitude * a * a, s.amplitude * b * b);
    return {(M * vel).norm(), 0.0, 0.0, (M * acc).norm()};
  }

  /// Formation centred at the origin.
  Vector initial_point() const {
    Vector x = Vector::Zero(dim());
    x.tail(2 * spec_.N) = b_;
    return x;
  }

 private:
  FormationSpec spec_;
  Matrix A_;
  Vector b_;
  Matrix V_;
  Matrix Q_;
  double m_ = 0.0;
  double L_ = 0.0;
  NonsmoothCost g_;
  Eigen::FullPivLU<Matrix> kkt_;
};

/**
 * @brief Runs the prediction-correction loop on the formation problem for
 * floor(duration/Ts) steps.
 *
 * Step k: the cost anchored at x_k drives the prediction (at t_k) and the
 * correction (at t_{k+1}); x*_{k+1} is the exact minimizer of that same
 * instance.
 */
inline TrajectoryRecord run_benchmark(const FormationSpec& spec, const PCConfig& cfg,
                                      double duration) {
  cfg.validate();
  const FormationProblem problem(spec);
  const NonsmoothCost& g = problem.constraint();
  const int K = step_count(duration, cfg.Ts);
  const double t0 = 0.0;

  TrajectoryRecord rec;
  rec.duration = duration;
  for (auto* v : {&rec.times, &rec.errors, &rec.pred_residuals, &rec.corr_residuals}) {
    v->reserve(static_cast<std::size_t>(K));
  }
  Vector x = problem.initial_point();
  rec.initial_error = (x - problem.oracle(problem.build_step_cost(problem.measurements(t0, cfg.Ts, 0), x))).norm();

  for (int k = 0; k < K; ++k) {
    try {
      const double t_k = t0 + k * cfg.Ts;
      const double t_next = t0 + (k + 1) * cfg.Ts;
      const SmoothCost f_k = problem.time_varying_cost(x, t0, cfg.Ts);
      OnlineState state{k, x, std::nullopt};
      if (cfg.derivative_mode == DerivativeMode::BackwardDifference && k >= 1) {
        state.prev_grad = f_k.grad(x, t0 + (k - 1) * cfg.Ts);
      }
      Prediction pred = predict(state, f_k, g, cfg, t_k);
      const QuadraticCost cost = problem.build_step_cost(
          problem.measurements(t0, cfg.Ts, static_cast<std::uint64_t>(k + 1)), x);
      const SmoothCost f_next = cost.smooth();
      Vector x_next = correct(pred.x, f_next, t_next, g, cfg);
      require_finite(x_next, "corrected iterate");
      Vector x_star = problem.oracle(cost);

      rec.times.push_back(t_next);
      rec.pred_residuals.push_back(
          fixed_point_residual(pred.x, pred.model.smooth(), t_k, g, cfg.split.rho));
      rec.corr_residuals.push_back(fixed_point_residual(x_next, f_next, t_next, g, cfg.split.rho));
      rec.errors.push_back((x_next - x_star).norm());
      rec.predictions.push_back(std::move(pred.x));
      rec.oracle_optima.push_back(std::move(x_star));
      rec.iterates.push_back(x_next);
      x = std::move(x_next);
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
  }
  rec.asymptotic_error = asymptotic_error(rec.times, rec.errors, duration);
  return rec;
}

enum class NoiseRule { Fixed, ScaledByTs };

struct SweepRow {
  double Ts = 0.0;
  double asymptotic_error = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::optional<double> slope;  // nullopt: fewer than two Ts values
};

/**
 * @brief Asymptotic error for each sampling period. Under ScaledByTs every
 * sigma_i is replaced by 0.01 Ts. Runs execute concurrently; results are
 * returned in input order.
 */
inline SweepTable sweep_ts(const FormationSpec& spec, const PCConfig& base,
                           const std::vector<double>& ts_values, NoiseRule rule,
                           double duration) {
  if (ts_values.empty()) throw ParameterError("sweep_ts: ts_values must be nonempty");
  std::vector<std::future<double>> jobs;
  jobs.reserve(ts_values.size());
  for (double Ts : ts_values) {
    FormationSpec s = spec;
    if (rule == NoiseRule::ScaledByTs) s.sigmas.assign(static_cast<std::size_t>(s.N), 0.01 * Ts);
    PCConfig cfg = base;
    cfg.Ts = Ts;
    jobs.push_back(std::async(std::launch::async, [s = std::move(s), cfg, duration] {
      return run_benchmark(s, cfg, duration).asymptotic_error;
    }));
  }
  SweepTable table;
  std::vector<double> errs;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const double e = jobs[i].get();
    table.rows.push_back({ts_values[i], e});
    errs.push_back(e);
  }
  table.slope = loglog_slope(ts_values, errs);
  return table;
}

}  // namespace tvopt

#endif  // TVOPT_BENCHMARK_HPP_
