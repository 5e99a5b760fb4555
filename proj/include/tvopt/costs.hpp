#ifndef TVOPT_COSTS_HPP_
#define TVOPT_COSTS_HPP_

/**
 * @file
 * @brief Cost models for f(x;t) + g(x): the smooth time-varying part, the
 * nonsmooth part (accessed through its proximal map) and the proximal
 * operators used throughout the library.
 */

#include "tvopt/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>

namespace tvopt {

/// Bounds on the derivatives of f: C0 for the mixed t-x derivative of the
/// gradient, C1..C3 for the third-order tensors.
struct DerivativeBounds {
  double C0 = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;

  void validate() const {
    for (double c : {C0, C1, C2, C3}) {
      if (!std::isfinite(c) || c < 0.0) {
        throw ParameterError("derivative bounds must be finite and nonnegative");
      }
    }
  }
};

/**
 * @brief Time-varying smooth cost f(x;t), m-strongly convex with L-Lipschitz
 * gradient uniformly in t.
 *
 * `grad` and `hessian` are mandatory. `grad_time` (the mixed derivative
 * d/dt grad_x f) and `exact_prox` are optional capabilities; `value` is only
 * used for validation.
 */
struct SmoothCost {
  using VectorField = std::function<Vector(const Vector&, double)>;
  using MatrixField = std::function<Matrix(const Vector&, double)>;
  using ProxMap = std::function<Vector(const Vector&, double, double)>;
  using ScalarField = std::function<double(const Vector&, double)>;

  VectorField grad;
  MatrixField hessian;
  VectorField grad_time;  // optional
  ProxMap exact_prox;     // optional: (v, t, rho) -> prox_{rho f(.;t)}(v)
  ScalarField value;      // optional
  double m = 0.0;
  double L = 0.0;

  bool has_grad_time() const { return static_cast<bool>(grad_time); }
  bool has_exact_prox() const { return static_cast<bool>(exact_prox); }

  void validate_constants() const {
    if (!(m > 0.0) || !(L >= m) || !std::isfinite(L)) {
      throw ParameterError("smooth cost requires 0 < m <= L < inf (got m=" + std::to_string(m) +
                           ", L=" + std::to_string(L) + ")");
    }
    if (!grad || !hessian) {
      throw CapabilityError("smooth cost requires gradient and Hessian oracles");
    }
  }
};

/// Proper closed convex g, exposed through prox_{rho g}.
struct NonsmoothCost {
  std::function<Vector(const Vector&, double)> prox;
  std::function<double(const Vector&)> value;  // optional
  bool indicator = false;
  std::string name;
};

inline void require_positive_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ParameterError("step-size rho must be positive and finite (got " + std::to_string(rho) +
                         ")");
  }
}

/// Soft thresholding sign(x_i) max(|x_i| - rho*weight, 0).
inline Vector prox_l1(const Vector& x, double rho, double weight = 1.0) {
  require_positive_rho(rho);
  if (!(weight > 0.0)) throw ParameterError("l1 weight must be positive");
  const double thr = rho * weight;
  return x.unaryExpr([thr](double v) {
    const double a = std::abs(v) - thr;
    return a > 0.0 ? std::copysign(a, v) : 0.0;
  });
}

/**
 * @brief Euclidean projection onto {x : A x = b}.
 *
 * The Cholesky factor of A A^T is computed once at construction; the
 * constraint set is time-invariant, so the factor is reused on every call.
 */
class AffineProjector {
 public:
  AffineProjector(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size()) {
      throw DimensionError("affine constraint: A has " + std::to_string(A_.rows()) +
                           " rows but b has " + std::to_string(b_.size()) + " entries");
    }
    if (A_.rows() > 0) {
      const Matrix gram = A_ * A_.transpose();
      llt_.compute(gram);
      const double scale = gram.diagonal().cwiseAbs().maxCoeff();
      if (llt_.info() != Eigen::Success || !(scale > 0.0) || llt_.rcond() < 1e-12) {
        throw SingularityError(
            "affine projection: Cholesky factorization of A*A^T failed (A lacks full row rank)");
      }
    }
  }

  Vector operator()(const Vector& x) const {
    if (x.size() != A_.cols()) {
      throw DimensionError("affine projection: point has size " + std::to_string(x.size()) +
                           ", expected " + std::to_string(A_.cols()));
    }
    if (A_.rows() == 0) return x;
    const Vector residual = A_ * x - b_;
    return x - A_.transpose() * llt_.solve(residual);
  }

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

 private:
  Matrix A_;
  Vector b_;
  Eigen::LLT<Matrix> llt_;
};

/// One-shot projection x - A^T (A A^T)^{-1} (A x - b). Prefer AffineProjector
/// when projecting repeatedly onto the same set.
inline Vector prox_affine_indicator(const Vector& x, const Matrix& A, const Vector& b) {
  return AffineProjector(A, b)(x);
}

/**
 * @brief Time-invariant quadratic 0.5 x'Qx + q'x.
 *
 * m and L are the extreme eigenvalues of Q when built through
 * build_quadratic(); the prediction model declares them from the cost it
 * approximates instead.
 */
class QuadraticCost {
 public:
  QuadraticCost() = default;

  /// Declares (m, L) without an eigen-decomposition. Q must be SPD.
  QuadraticCost(Matrix Q, Vector q, double m, double L)
      : Q_(std::move(Q)), q_(std::move(q)), m_(m), L_(L) {
    if (Q_.rows() != Q_.cols() || Q_.rows() != q_.size()) {
      throw DimensionError("quadratic cost: Q must be n x n and q of length n");
    }
    if (!(m_ > 0.0) || !(L_ >= m_)) {
      throw ParameterError("quadratic cost requires 0 < m <= L");
    }
  }

  Eigen::Index dim() const { return q_.size(); }
  const Matrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  double m() const { return m_; }
  double L() const { return L_; }

  Vector gradient(const Vector& x) const { return Q_ * x + q_; }
  double value(const Vector& x) const { return 0.5 * x.dot(Q_ * x) + q_.dot(x); }

  /// prox_{rho f}(v): solves (I + rho Q) y = v - rho q.
  Vector prox(const Vector& v, double rho) const {
    require_positive_rho(rho);
    require_same_size(v, q_, "quadratic prox");
    Matrix system = rho * Q_;
    system.diagonal().array() += 1.0;
    return system.llt().solve(v - rho * q_);
  }

  /// Time-invariant SmoothCost view with an exact prox.
  SmoothCost smooth() const {
    auto self = std::make_shared<const QuadraticCost>(*this);
    SmoothCost f;
    f.grad = [self](const Vector& x, double) { return self->gradient(x); };
    f.hessian = [self](const Vector&, double) { return self->Q(); };
    f.grad_time = [self](const Vector&, double) { return Vector::Zero(self->dim()).eval(); };
    f.exact_prox = [self](const Vector& v, double, double rho) { return self->prox(v, rho); };
    f.value = [self](const Vector& x, double) { return self->value(x); };
    f.m = m_;
    f.L = L_;
    return f;
  }

 private:
  Matrix Q_;
  Vector q_;
  double m_ = 0.0;
  double L_ = 0.0;
};

inline Vector prox_quadratic(const QuadraticCost& cost, const Vector& v, double rho) {
  return cost.prox(v, rho);
}

/// Builds 0.5 x'Qx + q'x with m, L set to the extreme eigenvalues of Q.
/// Rejects non-symmetric or non-positive-definite Q.
inline QuadraticCost build_quadratic(const Matrix& Q, const Vector& q) {
  if (Q.rows() != Q.cols() || Q.rows() != q.size() || Q.rows() == 0) {
    throw DimensionError("build_quadratic: Q must be a nonempty n x n matrix matching q");
  }
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ParameterError("build_quadratic: Q is not symmetric");
  }
  const Matrix sym = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw SingularityError("build_quadratic: eigen-decomposition of Q failed");
  }
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw ParameterError("build_quadratic: Q is not positive definite (lambda_min = " +
                         std::to_string(lo) + ")");
  }
  return QuadraticCost(sym, q, lo, hi);
}

// ---- nonsmooth instances ----------------------------------------------------

inline NonsmoothCost zero_cost() {
  NonsmoothCost g;
  g.prox = [](const Vector& x, double rho) {
    require_positive_rho(rho);
    return x;
  };
  g.value = [](const Vector&) { return 0.0; };
  g.name = "zero";
  return g;
}

inline NonsmoothCost l1_cost(double weight = 1.0) {
  if (!(weight > 0.0)) throw ParameterError("l1 weight must be positive");
  NonsmoothCost g;
  g.prox = [weight](const Vector& x, double rho) { return prox_l1(x, rho, weight); };
  g.value = [weight](const Vector& x) { return weight * x.lpNorm<1>(); };
  g.name = "l1";
  return g;
}

inline NonsmoothCost affine_indicator(const Matrix& A, const Vector& b) {
  auto proj = std::make_shared<const AffineProjector>(A, b);
  NonsmoothCost g;
  g.prox = [proj](const Vector& x, double rho) {
    require_positive_rho(rho);
    return (*proj)(x);
  };
  g.value = [proj](const Vector& x) {
    const double r = (proj->A() * x - proj->b()).norm();
    return r <= 1e-10 * (1.0 + proj->b().norm()) ? 0.0 : std::numeric_limits<double>::infinity();
  };
  g.indicator = true;
  g.name = "affine_indicator";
  return g;
}

/// Indicator of the box lo <= x <= hi (componentwise, bounds may be infinite).
inline NonsmoothCost box_indicator(double lo, double hi) {
  if (lo > hi) throw ParameterError("box indicator requires lo <= hi");
  NonsmoothCost g;
  g.prox = [lo, hi](const Vector& x, double rho) {
    require_positive_rho(rho);
    return x.cwiseMax(lo).cwiseMin(hi).eval();
  };
  g.value = [lo, hi](const Vector& x) {
    return (x.array() >= lo).all() && (x.array() <= hi).all()
               ? 0.0
               : std::numeric_limits<double>::infinity();
  };
  g.indicator = true;
  g.name = "box_indicator";
  return g;
}

// ---- validation -------------------------------------------------------------

struct SmoothCostCheck {
  bool ok = true;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_eigenvalue = -std::numeric_limits<double>::infinity();
  double max_asymmetry = 0.0;
  double max_gradient_mismatch = 0.0;  // vs central differences of `value`
  std::string message;
};

/**
 * @brief Samples the Hessian (and the gradient, when a scalar evaluator is
 * present) at the given (point, time) pairs and checks the declared m, L.
 */
inline SmoothCostCheck check_smooth_cost(const SmoothCost& f, std::span<const Vector> points,
                                         std::span<const double> times, double tol = 1e-8) {
  f.validate_constants();
  SmoothCostCheck out;
  for (const Vector& x : points) {
    for (double t : times) {
      const Matrix H = f.hessian(x, t);
      const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
      out.max_asymmetry = std::max(out.max_asymmetry, (H - H.transpose()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
      out.min_eigenvalue = std::min(out.min_eigenvalue, eig.eigenvalues().minCoeff());
      out.max_eigenvalue = std::max(out.max_eigenvalue, eig.eigenvalues().maxCoeff());
      if (out.max_asymmetry > tol * scale) {
        out.ok = false;
        out.message = "Hessian is not symmetric";
      }
      if (f.value) {
        const Vector g = f.grad(x, t);
        const double h = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          Vector xp = x;
          Vector xm = x;
          xp[i] += h;
          xm[i] -= h;
          const double fd = (f.value(xp, t) - f.value(xm, t)) / (2.0 * h);
          const double err = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
          out.max_gradient_mismatch = std::max(out.max_gradient_mismatch, err);
        }
      }
    }
  }
  if (out.min_eigenvalue < f.m - tol || out.max_eigenvalue > f.L + tol) {
    out.ok = false;
    out.message = "sampled Hessian spectrum [" + std::to_string(out.min_eigenvalue) + ", " +
                  std::to_string(out.max_eigenvalue) + "] exceeds declared [m, L]";
  }
  if (out.max_gradient_mismatch > 1e-5) {
    out.ok = false;
    out.message = "gradient disagrees with central differences of the value";
  }
  return out;
}

}  // namespace tvopt

#endif  // TVOPT_COSTS_HPP_
