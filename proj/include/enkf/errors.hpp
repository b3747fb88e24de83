#pragma once

#include <stdexcept>
#include <string>

namespace enkf {

// Root of the project's error hierarchy. exit_code() maps the category to the
// process exit convention: 1 validation/parse, 2 numerical failure, 3 I/O.
class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int code) : std::runtime_error(msg), code_(code) {}
  int exit_code() const noexcept { return code_; }

 private:
  int code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg, 1) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg, 1) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg, 2) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg, 3) {}
};

class DimensionMismatch : public ValidationError {
 public:
  explicit DimensionMismatch(const std::string& msg)
      : ValidationError("dimension mismatch: " + msg) {}
};

class AsymmetricMatrix : public ValidationError {
 public:
  explicit AsymmetricMatrix(const std::string& name)
      : ValidationError(name + ": matrix is not symmetric") {}
};

class NotPsd : public ValidationError {
 public:
  NotPsd(const std::string& name, double min_eig, bool needs_definite)
      : ValidationError(name + ": min eigenvalue " + std::to_string(min_eig) +
                        (needs_definite ? " not positive definite" : " not positive semidefinite")) {}
};

class SingularInnovation : public NumericError {
 public:
  explicit SingularInnovation(double cond)
      : NumericError("innovation covariance ill-conditioned (cond ~ " + std::to_string(cond) + ")") {}
};

class IndefiniteGamma : public NumericError {
 public:
  explicit IndefiniteGamma(double min_eig)
      : NumericError("target anomaly covariance is indefinite (min eigenvalue " +
                     std::to_string(min_eig) + "); no transform exists here") {}
};

class DegenerateEnsemble : public NumericError {
 public:
  explicit DegenerateEnsemble(const std::string& msg)
      : NumericError("degenerate ensemble: " + msg) {}
};

class NotScalarObservation : public ValidationError {
 public:
  explicit NotScalarObservation(int m)
      : ValidationError("scalar-observation solver called with m=" + std::to_string(m)) {}
};

class EnsembleTooSmall : public ValidationError {
 public:
  EnsembleTooSmall(int N, int needed)
      : ValidationError("ensemble size " + std::to_string(N) + " below required " +
                        std::to_string(needed)) {}
};

// Signals that a convergence fit was requested on errors already at the
// deterministic floor, where no sampling-rate slope is identifiable.
class FlooredError : public NumericError {
 public:
  explicit FlooredError(double max_rms)
      : NumericError("errors at deterministic floor (max rms " + std::to_string(max_rms) +
                     "); slope fit rejected") {}
};

}  // namespace enkf
