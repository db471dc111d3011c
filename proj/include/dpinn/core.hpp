#pragma once

// Shared small-vector types and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dpinn {

// Space and space-time vectors never exceed 4 entries (3D + time); the
// max-size template arguments keep them off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

// Columns are space-time points (x..., t); time is always the last row.
using PointMatrix = Eigen::MatrixXd;

/// Value and the derivatives of a scalar field that the strong-form
/// residual consumes. `hess_x` is the spatial block only.
struct DerivativeBundle {
  double value = 0.0;
  double du_dt = 0.0;
  Vec grad_x;
  Mat hess_x;

  static DerivativeBundle zero(int spatial_dim) {
    DerivativeBundle b;
    b.grad_x = Vec::Zero(spatial_dim);
    b.hess_x = Mat::Zero(spatial_dim, spatial_dim);
    return b;
  }
};

/// Malformed graph, layout or dimension mismatch. Programming errors.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An operation that the given object does not support (e.g. a closed-form
/// norm for a problem without one).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid or missing user configuration. `key()` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Non-finite values met during loss or gradient evaluation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpinn
