#pragma once

// Batched Taylor-mode evaluation of the network and its exact reverse pass.
//
// Every layer carries, per point, the value channel plus input-derivative
// channels: first derivatives with respect to all inputs and second
// derivatives for the spatial pairs (k <= l). The affine maps act on all
// channels at once (one GEMM per layer); the activation propagates them with
// the second-order chain rule. `forward_backward` then back-propagates
// adjoints of any output channel to the parameters, so a loss that uses
// input-derivatives of the network is differentiated exactly in theta.

#include "dpinn/core.hpp"
#include "dpinn/mlp.hpp"

#include <functional>
#include <span>
#include <vector>

namespace dpinn {

/// Channel indexing: 0 = value, 1 + k = d/dz_k (k < input_dim, time last),
/// then one channel per spatial pair (k, l), k <= l < spatial_dim.
class ChannelLayout {
 public:
  ChannelLayout(int input_dim, bool with_derivatives);

  int input_dim() const { return input_dim_; }
  int spatial_dim() const { return input_dim_ - 1; }
  bool with_derivatives() const { return with_derivatives_; }
  int count() const { return count_; }

  int value() const { return 0; }
  int first(int k) const { return 1 + k; }
  int time() const { return first(input_dim_ - 1); }
  int pair(int k, int l) const;
  int pair_count() const { return with_derivatives_ ? spatial_dim() * (spatial_dim() + 1) / 2 : 0; }

  struct Pair {
    int k;
    int l;
    int channel;
  };
  const std::vector<Pair>& pairs() const { return pairs_; }

 private:
  int input_dim_;
  bool with_derivatives_;
  int count_;
  std::vector<Pair> pairs_;
};

class BatchEngine {
 public:
  /// Scratch storage for one chunk; not shared between threads.
  struct Workspace {
    std::vector<Eigen::MatrixXd> pre;   // A_l, width x (C * B)
    std::vector<Eigen::MatrixXd> post;  // H_l, post[0] is the input block
    std::vector<Eigen::ArrayXXd> s1, s2;
    Eigen::MatrixXd out;                // 1 x (C * B)
    Eigen::MatrixXd bar_a, bar_h, out_bar;
    // Aligned copies of the weights and weight-gradient scratch. Products
    // never touch caller memory directly: Eigen's kernels split work by
    // pointer alignment, which would make rounding depend on where theta
    // happens to live.
    std::vector<Eigen::MatrixXd> weights;
    Eigen::MatrixXd grad_w;
    Eigen::VectorXd grad_b;
  };

  /// Called between the passes with the output channels of a chunk as a
  /// B x C matrix; it must fill the adjoints (same shape) of the loss with
  /// respect to those outputs. `first` is the chunk's offset in the batch.
  using AdjointFn = std::function<void(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                                       Eigen::Ref<Eigen::MatrixXd> adjoints, Eigen::Index first)>;

  BatchEngine(const NetworkConfig& config, bool with_derivatives);

  const ChannelLayout& channels() const { return channels_; }
  const NetworkConfig& config() const { return config_; }

  /// Forward pass over `points` (input_dim x B). Returns the B x C output
  /// channel matrix (view into the workspace).
  Eigen::Map<const Eigen::MatrixXd> forward(std::span<const double> theta,
                                            const Eigen::Ref<const PointMatrix>& points,
                                            Workspace& ws) const;

  /// Forward, adjoint callback, reverse. Adds d loss / d theta into `grad`.
  void forward_backward(std::span<const double> theta,
                        const Eigen::Ref<const PointMatrix>& points, const AdjointFn& adjoint,
                        Eigen::Index first, std::span<double> grad, Workspace& ws) const;

  /// Values only, any number of points.
  Eigen::VectorXd values(std::span<const double> theta, const PointMatrix& points,
                         Eigen::Index chunk = 512) const;

  /// Derivative bundles for every column of `points`. Requires derivatives.
  std::vector<DerivativeBundle> bundles(std::span<const double> theta,
                                        const PointMatrix& points,
                                        Eigen::Index chunk = 256) const;

  /// Splits one row of the B x C output matrix into a bundle.
  DerivativeBundle to_bundle(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                             Eigen::Index row) const;

 private:
  void check_theta(std::span<const double> theta) const;

  NetworkConfig config_;
  ParameterLayout layout_;
  ChannelLayout channels_;
};

}  // namespace dpinn
