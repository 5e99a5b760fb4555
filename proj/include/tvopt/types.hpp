#ifndef TVOPT_TYPES_HPP_
#define TVOPT_TYPES_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace tvopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scalar argument is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The step-size violates the precondition of the requested splitting.
class StepSizeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A factorization required by the operation is (numerically) singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A cost model lacks an oracle the operation needs (exact prox, time derivative).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Requested bound parameters admit no solution (e.g. tau <= zeta(P+C)).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

inline void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a.size()) +
                         " does not match " + std::to_string(b.size()));
  }
}

}  // namespace tvopt

#endif  // TVOPT_TYPES_HPP_
