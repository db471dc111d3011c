#pragma once

// Discrete PINN loss and its ADAM minimization.
//
//   L_F = mean over interior points of R(z)^2
//   L_B = mean over boundary and initial points of (u_hat(z) - w(z))^2
//   total = w_F L_F + w_B L_B

#include "dpinn/collocation.hpp"
#include "dpinn/core.hpp"
#include "dpinn/mlp.hpp"
#include "dpinn/mlp_engine.hpp"
#include "dpinn/problems.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpinn {

struct LossWeights {
  double physics = 1.0;
  double boundary = 1.0;
};

struct LossBreakdown {
  double physics = 0.0;
  double boundary = 0.0;
  LossWeights weights;
  double total = 0.0;

  static LossBreakdown combine(double physics, double boundary, LossWeights weights) {
    return {physics, boundary, weights, weights.physics * physics + weights.boundary * boundary};
  }
};

/// Anything that can be evaluated like the network: values and derivative
/// bundles at columns (x..., t) of a point matrix.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual Eigen::VectorXd values(const PointMatrix& points) const = 0;
  virtual std::vector<DerivativeBundle> bundles(const PointMatrix& points) const = 0;
};

class NetworkSurrogate final : public Surrogate {
 public:
  NetworkSurrogate(NetworkConfig config, ParameterVector theta);
  Eigen::VectorXd values(const PointMatrix& points) const override;
  std::vector<DerivativeBundle> bundles(const PointMatrix& points) const override;
  const ParameterVector& params() const { return theta_; }

 private:
  NetworkConfig config_;
  ParameterVector theta_;
  BatchEngine engine_;
};

/// The problem's exact solution posing as a trained model.
class ExactSurrogate final : public Surrogate {
 public:
  explicit ExactSurrogate(const ProblemSpec& spec);
  Eigen::VectorXd values(const PointMatrix& points) const override;
  std::vector<DerivativeBundle> bundles(const PointMatrix& points) const override;

 private:
  const ProblemSpec* spec_;
};

/// Collocation data laid out for batch evaluation, with forcing and data
/// values precomputed.
struct LossData {
  PointMatrix interior;
  Eigen::VectorXd forcing;
  PointMatrix data_points;  // boundary then initial
  Eigen::VectorXd targets;
  double eps = 0.0;

  /// Throws NumericalError if the forcing or data are non-finite anywhere.
  static LossData prepare(const ProblemSpec& spec, const CollocationSet& colloc);
};

LossBreakdown compute_loss(const Surrogate& model, const LossData& data, LossWeights weights);
LossBreakdown compute_loss(const Surrogate& model, const ProblemSpec& spec,
                           const CollocationSet& colloc, LossWeights weights);

/// Loss and exact parameter gradient for the network.
///
/// Points are processed in fixed chunks; each chunk's gradient goes to its
/// own buffer and buffers are summed in chunk order, so the result is
/// bitwise independent of the thread count. Not safe for concurrent calls on
/// one instance (workspaces are reused).
class LossEvaluator {
 public:
  LossEvaluator(const NetworkConfig& config, LossData data, LossWeights weights, int threads = 1,
                Eigen::Index chunk = 64);

  LossBreakdown value_and_gradient(std::span<const double> theta, std::span<double> grad) const;
  const LossData& data() const { return data_; }

 private:
  struct Task {
    bool interior;
    Eigen::Index first;
    Eigen::Index count;
  };
  void run_task(std::size_t index, std::span<const double> theta, BatchEngine::Workspace& ws) const;

  NetworkConfig config_;
  LossData data_;
  LossWeights weights_;
  int threads_;
  BatchEngine full_engine_;
  BatchEngine value_engine_;
  std::vector<Task> tasks_;
  mutable std::vector<std::vector<double>> task_grads_;
  mutable std::vector<double> task_sums_;
  mutable std::vector<BatchEngine::Workspace> workspaces_;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 3e-3;

  static AdamState fresh(std::size_t n, double lr);
};

/// One bias-corrected ADAM update of `theta` in place. Throws
/// NumericalError on a non-finite gradient and StructuralError on a size
/// mismatch.
void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad);

struct TrainConfig {
  std::int64_t epochs = 80000;
  double lr = 3e-3;
  std::uint64_t seed = 0;
  LossWeights weights;
  int threads = 1;
  Eigen::Index chunk = 64;
  /// Abort when the total loss exceeds this multiple of its initial value.
  double divergence_factor = 1e6;
  std::int64_t checkpoint_every = 0;
  std::function<void(std::int64_t epoch, const ParameterVector& theta)> on_checkpoint;
  /// Called after each epoch with its (pre-update) loss.
  std::function<void(std::int64_t epoch, const LossBreakdown& loss)> on_epoch;
};

struct TrainReport {
  std::int64_t epochs_run = 0;
  std::vector<LossBreakdown> history;  // loss at the start of each epoch
  ParameterVector initial_params;
  ParameterVector final_params;
  LossBreakdown final_loss;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool diverged = false;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, TrainReport report)
      : std::runtime_error(what), report_(std::make_shared<TrainReport>(std::move(report))) {}
  const TrainReport& report() const { return *report_; }

 private:
  std::shared_ptr<TrainReport> report_;
};

/// Full-batch ADAM from Glorot-initialized parameters (seeded by
/// `train.seed`).
TrainReport train(const ProblemSpec& spec, const CollocationSet& colloc,
                  const NetworkConfig& net, const TrainConfig& train);

/// Same, starting from given parameters.
TrainReport train_from(const ProblemSpec& spec, const CollocationSet& colloc,
                       const NetworkConfig& net, const TrainConfig& train,
                       ParameterVector initial);

/// CSV "epoch,physics,boundary,total".
void write_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history);

}  // namespace dpinn
