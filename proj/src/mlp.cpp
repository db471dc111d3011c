#include "dpinn/mlp.hpp"

#include "dpinn/mlp_engine.hpp"

#include <cmath>
#include <random>

namespace dpinn {

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity" || s == "linear") return Activation::kIdentity;
  throw ConfigError("hidden_activation", "unknown activation '" + s + "'");
}

void NetworkConfig::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim", "input_dim must be >= 1");
  if (hidden_layers < 0) throw ConfigError("hidden_layers", "hidden_layers must be >= 0");
  if (hidden_layers > 0 && hidden_width < 1) {
    throw ConfigError("hidden_width", "hidden_width must be >= 1");
  }
  const auto n = static_cast<std::size_t>(input_dim);
  if (input_shift.size() != input_scale.size() ||
      (!input_scale.empty() && input_scale.size() != n)) {
    throw ConfigError("normalize_inputs", "input transform must have one entry per input");
  }
}

std::vector<int> NetworkConfig::layer_widths() const {
  std::vector<int> w{input_dim};
  for (int i = 0; i < hidden_layers; ++i) w.push_back(hidden_width);
  w.push_back(1);
  return w;
}

ParameterLayout ParameterLayout::for_config(const NetworkConfig& config) {
  config.validate();
  ParameterLayout layout;
  const std::vector<int> widths = config.layer_widths();
  std::size_t offset = 0;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    LayerSlice s;
    s.rows = widths[i];
    s.cols = widths[i - 1];
    s.weight_offset = offset;
    offset += static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(s.rows);
    layout.layers.push_back(s);
  }
  layout.total = offset;
  return layout;
}

std::vector<LayerParams> unpack(const ParameterVector& theta) {
  if (theta.values.size() != theta.layout.total) {
    throw StructuralError("unpack: parameter vector does not match its layout");
  }
  std::vector<LayerParams> out;
  out.reserve(theta.layout.layers.size());
  for (const LayerSlice& s : theta.layout.layers) {
    LayerParams p;
    p.weights = Eigen::Map<const Eigen::MatrixXd>(theta.values.data() + s.weight_offset, s.rows,
                                                  s.cols);
    p.bias = Eigen::Map<const Eigen::VectorXd>(theta.values.data() + s.bias_offset, s.rows);
    out.push_back(std::move(p));
  }
  return out;
}

ParameterVector pack(const std::vector<LayerParams>& layers) {
  ParameterVector theta;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerParams& p = layers[i];
    if (p.bias.size() != p.weights.rows() ||
        (i > 0 && p.weights.cols() != layers[i - 1].weights.rows())) {
      throw StructuralError("pack: inconsistent layer shapes");
    }
    LayerSlice s;
    s.rows = static_cast<int>(p.weights.rows());
    s.cols = static_cast<int>(p.weights.cols());
    s.weight_offset = offset;
    theta.values.insert(theta.values.end(), p.weights.data(), p.weights.data() + p.weights.size());
    offset += static_cast<std::size_t>(p.weights.size());
    s.bias_offset = offset;
    theta.values.insert(theta.values.end(), p.bias.data(), p.bias.data() + p.bias.size());
    offset += static_cast<std::size_t>(p.bias.size());
    theta.layout.layers.push_back(s);
  }
  theta.layout.total = offset;
  return theta;
}

ParameterVector zero_params(const NetworkConfig& config) {
  ParameterVector theta;
  theta.layout = ParameterLayout::for_config(config);
  theta.values.assign(theta.layout.total, 0.0);
  return theta;
}

ParameterVector init_params(const NetworkConfig& config, std::uint64_t seed) {
  ParameterVector theta = zero_params(config);
  std::mt19937_64 rng(seed);
  for (const LayerSlice& s : theta.layout.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    for (std::size_t i = 0; i < n; ++i) theta.values[s.weight_offset + i] = dist(rng);
  }
  return theta;
}

double evaluate(const ParameterVector& theta, const NetworkConfig& config, const Vec& z) {
  if (z.size() != config.input_dim) {
    throw StructuralError("evaluate: input dimension mismatch");
  }
  return evaluate_generic<double>(config, theta.span(),
                                  std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

DerivativeBundle evaluate_bundle(const ParameterVector& theta, const NetworkConfig& config,
                                 const Vec& z) {
  if (z.size() != config.input_dim) {
    throw StructuralError("evaluate_bundle: input dimension mismatch");
  }
  BatchEngine engine(config, true);
  PointMatrix pts = z;
  return engine.bundles(theta.span(), pts).front();
}

}  // namespace dpinn
