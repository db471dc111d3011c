#pragma once

// Fully connected feed-forward network u(z) = (G_N o phi o ... o phi o G_1)(z)
// with affine maps G_i(z) = W_i z + b_i, a shared hidden activation and a
// linear output layer. Parameters live in one flat vector.

#include "dpinn/autodiff.hpp"
#include "dpinn/core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dpinn {

enum class Activation { kTanh, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct NetworkConfig {
  int input_dim = 3;
  int hidden_layers = 4;
  int hidden_width = 20;
  Activation hidden_activation = Activation::kTanh;
  // The output layer is always linear.

  // Optional affine input transform z' = scale * (z - shift), applied before
  // the first layer. Empty vectors mean identity (the default).
  std::vector<double> input_shift;
  std::vector<double> input_scale;

  /// Throws ConfigError for non-positive sizes or a malformed transform.
  void validate() const;

  /// Widths n_0 .. n_L including input and the scalar output.
  std::vector<int> layer_widths() const;

  bool operator==(const NetworkConfig&) const = default;
};

struct LayerSlice {
  int rows = 0;  // n_i
  int cols = 0;  // n_{i-1}
  std::size_t weight_offset = 0;  // column-major rows x cols block
  std::size_t bias_offset = 0;

  bool operator==(const LayerSlice&) const = default;
};

struct ParameterLayout {
  std::vector<LayerSlice> layers;
  std::size_t total = 0;

  static ParameterLayout for_config(const NetworkConfig& config);
  bool operator==(const ParameterLayout&) const = default;
};

/// Flattened weights and biases with the layout that maps them to layers.
struct ParameterVector {
  std::vector<double> values;
  ParameterLayout layout;

  std::size_t size() const { return values.size(); }
  std::span<const double> span() const { return values; }
  std::span<double> span() { return values; }
};

struct LayerParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

std::vector<LayerParams> unpack(const ParameterVector& theta);
ParameterVector pack(const std::vector<LayerParams>& layers);

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
/// Deterministic in `seed`.
ParameterVector init_params(const NetworkConfig& config, std::uint64_t seed);

/// Zero vector with the layout for `config`.
ParameterVector zero_params(const NetworkConfig& config);

namespace detail {

template <class T>
T apply_activation(Activation a, const T& x) {
  using std::tanh;
  using ad::tanh;
  return a == Activation::kTanh ? T(tanh(x)) : x;
}

}  // namespace detail

/// Network output for any scalar type supported by the autodiff module.
/// Used for reference evaluation and nested differentiation; the batch
/// engine is the fast path.
template <class T>
T evaluate_generic(const NetworkConfig& config, std::span<const T> params,
                   std::span<const T> z) {
  const ParameterLayout layout = ParameterLayout::for_config(config);
  if (params.size() != layout.total) {
    throw StructuralError("evaluate: parameter count does not match network layout");
  }
  if (static_cast<int>(z.size()) != config.input_dim) {
    throw StructuralError("evaluate: input dimension mismatch");
  }
  std::vector<T> cur(z.begin(), z.end());
  if (!config.input_scale.empty()) {
    for (std::size_t k = 0; k < cur.size(); ++k) {
      cur[k] = (cur[k] - config.input_shift[k]) * config.input_scale[k];
    }
  }
  std::vector<T> next;
  const std::size_t n_layers = layout.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerSlice& s = layout.layers[l];
    next.assign(static_cast<std::size_t>(s.rows), T(0.0));
    for (int i = 0; i < s.rows; ++i) {
      T acc = params[s.bias_offset + static_cast<std::size_t>(i)];
      for (int j = 0; j < s.cols; ++j) {
        acc = acc + params[s.weight_offset + static_cast<std::size_t>(j * s.rows + i)] *
                        cur[static_cast<std::size_t>(j)];
      }
      next[static_cast<std::size_t>(i)] =
          l + 1 < n_layers ? detail::apply_activation(config.hidden_activation, acc) : acc;
    }
    cur.swap(next);
  }
  return cur[0];
}

/// u_theta(z). Throws StructuralError on a dimension mismatch.
double evaluate(const ParameterVector& theta, const NetworkConfig& config, const Vec& z);

/// Value, time derivative, spatial gradient and spatial Hessian at z = (x, t).
DerivativeBundle evaluate_bundle(const ParameterVector& theta, const NetworkConfig& config,
                                 const Vec& z);

}  // namespace dpinn
