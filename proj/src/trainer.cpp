#include "dpinn/trainer.hpp"

#include "dpinn/checkpoint.hpp"
#include "dpinn/operator.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace dpinn {

namespace {

std::string describe_point(const Eigen::Ref<const Eigen::VectorXd>& z) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index k = 0; k < z.size(); ++k) os << (k ? ", " : "") << format_real(z(k));
  os << ')';
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const ProblemSpec& spec, const CollocationSet& colloc,
                        const NetworkConfig& net, const TrainConfig& train) {
  std::ostringstream os;
  os << to_string(spec.id) << '|' << format_real(spec.t1) << '|' << format_real(spec.t2) << '|'
     << format_real(spec.alpha) << '|' << format_real(spec.eps) << '|' << net.input_dim << '|'
     << net.hidden_layers << '|' << net.hidden_width << '|' << to_string(net.hidden_activation);
  for (double v : net.input_shift) os << '|' << format_real(v);
  for (double v : net.input_scale) os << '|' << format_real(v);
  os << '|' << train.epochs << '|' << format_real(train.lr) << '|' << train.seed << '|'
     << format_real(train.weights.physics) << '|' << format_real(train.weights.boundary) << '|'
     << colloc.provenance.strategy << '|' << colloc.provenance.seed << '|'
     << colloc.interior.size() << '|' << colloc.boundary.size() << '|' << colloc.initial.size();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

}  // namespace

// -- Surrogates -------------------------------------------------------------

NetworkSurrogate::NetworkSurrogate(NetworkConfig config, ParameterVector theta)
    : config_(std::move(config)), theta_(std::move(theta)), engine_(config_, true) {
  if (!(theta_.layout == ParameterLayout::for_config(config_))) {
    throw StructuralError("NetworkSurrogate: parameter layout does not match the network");
  }
}

Eigen::VectorXd NetworkSurrogate::values(const PointMatrix& points) const {
  return BatchEngine(config_, false).values(theta_.span(), points);
}

std::vector<DerivativeBundle> NetworkSurrogate::bundles(const PointMatrix& points) const {
  return engine_.bundles(theta_.span(), points);
}

ExactSurrogate::ExactSurrogate(const ProblemSpec& spec) : spec_(&spec) {
  if (!spec.has_exact()) throw UnsupportedOperation("problem has no exact solution");
}

Eigen::VectorXd ExactSurrogate::values(const PointMatrix& points) const {
  const int n = spec_->spatial_dim();
  Eigen::VectorXd v(points.cols());
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    v(c) = spec_->exact(points.col(c).head(n), points(n, c));
  }
  return v;
}

std::vector<DerivativeBundle> ExactSurrogate::bundles(const PointMatrix& points) const {
  const int n = spec_->spatial_dim();
  std::vector<DerivativeBundle> out;
  out.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    out.push_back(spec_->exact_derivatives(points.col(c).head(n), points(n, c)));
  }
  return out;
}

// -- Loss -------------------------------------------------------------------

LossData LossData::prepare(const ProblemSpec& spec, const CollocationSet& colloc) {
  LossData d;
  d.eps = spec.eps;
  d.interior = to_matrix(colloc.interior);
  d.forcing.resize(static_cast<Eigen::Index>(colloc.interior.size()));
  for (std::size_t i = 0; i < colloc.interior.size(); ++i) {
    const EvalPoint& p = colloc.interior[i];
    const double f = spec.forcing(p.x, p.t);
    if (!std::isfinite(f)) {
      throw NumericalError("non-finite forcing at interior point " +
                           describe_point(d.interior.col(static_cast<Eigen::Index>(i))));
    }
    d.forcing(static_cast<Eigen::Index>(i)) = f;
  }

  std::vector<EvalPoint> data = colloc.boundary;
  data.insert(data.end(), colloc.initial.begin(), colloc.initial.end());
  d.data_points = to_matrix(data);
  d.targets.resize(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const EvalPoint& p = data[i];
    const double w = p.role == Role::kInitial ? spec.initial(p.x) : spec.boundary(p.x, p.t);
    if (!std::isfinite(w)) {
      throw NumericalError("non-finite data at point " +
                           describe_point(d.data_points.col(static_cast<Eigen::Index>(i))));
    }
    d.targets(static_cast<Eigen::Index>(i)) = w;
  }
  return d;
}

LossBreakdown compute_loss(const Surrogate& model, const LossData& data, LossWeights weights) {
  double physics = 0.0;
  if (data.interior.cols() > 0) {
    const std::vector<DerivativeBundle> b = model.bundles(data.interior);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      const double r = residual(b[i], data.forcing(c), data.eps);
      if (!std::isfinite(r)) {
        throw NumericalError("non-finite residual at interior point " +
                             describe_point(data.interior.col(c)));
      }
      physics += r * r;
    }
    physics /= static_cast<double>(b.size());
  }
  double boundary = 0.0;
  if (data.data_points.cols() > 0) {
    const Eigen::VectorXd u = model.values(data.data_points);
    for (Eigen::Index c = 0; c < u.size(); ++c) {
      const double d = u(c) - data.targets(c);
      if (!std::isfinite(d)) {
        throw NumericalError("non-finite model value at point " +
                             describe_point(data.data_points.col(c)));
      }
      boundary += d * d;
    }
    boundary /= static_cast<double>(u.size());
  }
  return LossBreakdown::combine(physics, boundary, weights);
}

LossBreakdown compute_loss(const Surrogate& model, const ProblemSpec& spec,
                           const CollocationSet& colloc, LossWeights weights) {
  return compute_loss(model, LossData::prepare(spec, colloc), weights);
}

// -- Loss + gradient --------------------------------------------------------

LossEvaluator::LossEvaluator(const NetworkConfig& config, LossData data, LossWeights weights,
                             int threads, Eigen::Index chunk)
    : config_(config),
      data_(std::move(data)),
      weights_(weights),
      threads_(std::max(1, threads)),
      full_engine_(config, true),
      value_engine_(config, false) {
  if (chunk < 1) throw ConfigError("chunk", "chunk size must be positive");
  if (data_.interior.cols() > 0 && data_.interior.rows() != config.input_dim) {
    throw StructuralError("LossEvaluator: point dimension does not match the network");
  }
  for (Eigen::Index i = 0; i < data_.interior.cols(); i += chunk) {
    tasks_.push_back({true, i, std::min(chunk, data_.interior.cols() - i)});
  }
  for (Eigen::Index i = 0; i < data_.data_points.cols(); i += chunk) {
    tasks_.push_back({false, i, std::min(chunk, data_.data_points.cols() - i)});
  }
  const std::size_t n_params = ParameterLayout::for_config(config).total;
  task_grads_.assign(tasks_.size(), std::vector<double>(n_params, 0.0));
  task_sums_.assign(tasks_.size(), 0.0);
  workspaces_.resize(static_cast<std::size_t>(threads_));
}

void LossEvaluator::run_task(std::size_t index, std::span<const double> theta,
                             BatchEngine::Workspace& ws) const {
  const Task& task = tasks_[index];
  std::vector<double>& grad = task_grads_[index];
  std::fill(grad.begin(), grad.end(), 0.0);
  double sum = 0.0;

  if (task.interior) {
    const ChannelLayout& ch = full_engine_.channels();
    const double scale = 2.0 * weights_.physics / static_cast<double>(data_.interior.cols());
    const auto adjoint = [&](const Eigen::Ref<const Eigen::MatrixXd>& out,
                             Eigen::Ref<Eigen::MatrixXd> adj, Eigen::Index first) {
      adj.setZero();
      const int n = ch.spatial_dim();
      double grad_x[3], hess[9], d_grad[3], d_hess[9];
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (int k = 0; k < n; ++k) grad_x[k] = out(r, ch.first(k));
        for (const auto& pr : ch.pairs()) {
          hess[pr.k * n + pr.l] = hess[pr.l * n + pr.k] = out(r, pr.channel);
        }
        const double res = residual_with_partials(n, out(r, ch.time()), grad_x, hess,
                                                  data_.forcing(first + r), data_.eps, d_grad,
                                                  d_hess);
        if (!std::isfinite(res)) {
          throw NumericalError("non-finite residual at interior point " +
                               describe_point(data_.interior.col(first + r)));
        }
        sum += res * res;
        const double c = scale * res;
        adj(r, ch.time()) = c;
        for (int k = 0; k < n; ++k) adj(r, ch.first(k)) = c * d_grad[k];
        for (const auto& pr : ch.pairs()) {
          adj(r, pr.channel) = c * (pr.k == pr.l ? d_hess[pr.k * n + pr.k]
                                                  : d_hess[pr.k * n + pr.l] + d_hess[pr.l * n + pr.k]);
        }
      }
    };
    full_engine_.forward_backward(theta, data_.interior.middleCols(task.first, task.count),
                                  adjoint, task.first, grad, ws);
  } else {
    const double scale = 2.0 * weights_.boundary / static_cast<double>(data_.data_points.cols());
    const auto adjoint = [&](const Eigen::Ref<const Eigen::MatrixXd>& out,
                             Eigen::Ref<Eigen::MatrixXd> adj, Eigen::Index first) {
      adj.setZero();
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double d = out(r, 0) - data_.targets(first + r);
        if (!std::isfinite(d)) {
          throw NumericalError("non-finite model value at point " +
                               describe_point(data_.data_points.col(first + r)));
        }
        sum += d * d;
        adj(r, 0) = scale * d;
      }
    };
    value_engine_.forward_backward(theta, data_.data_points.middleCols(task.first, task.count),
                                   adjoint, task.first, grad, ws);
  }
  task_sums_[index] = sum;
}

LossBreakdown LossEvaluator::value_and_gradient(std::span<const double> theta,
                                                std::span<double> grad) const {
  if (grad.size() != theta.size()) throw StructuralError("gradient buffer size mismatch");
  const std::size_t n_tasks = tasks_.size();
  const auto n_workers = static_cast<std::size_t>(threads_);

  if (n_workers == 1 || n_tasks < 2) {
    for (std::size_t i = 0; i < n_tasks; ++i) run_task(i, theta, workspaces_[0]);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n_tasks; i += n_workers) run_task(i, theta, workspaces_[w]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  double physics = 0.0;
  double boundary = 0.0;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const std::vector<double>& g = task_grads_[i];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
    (tasks_[i].interior ? physics : boundary) += task_sums_[i];
  }
  if (data_.interior.cols() > 0) physics /= static_cast<double>(data_.interior.cols());
  if (data_.data_points.cols() > 0) boundary /= static_cast<double>(data_.data_points.cols());
  return LossBreakdown::combine(physics, boundary, weights_);
}

// -- ADAM -------------------------------------------------------------------

AdamState AdamState::fresh(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != grad.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size()) {
    throw StructuralError("adam_step: size mismatch");
  }
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (!std::isfinite(grad[j])) {
      throw NumericalError("non-finite gradient entry at parameter index " + std::to_string(j));
    }
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t j = 0; j < grad.size(); ++j) {
    state.m[j] = state.beta1 * state.m[j] + (1.0 - state.beta1) * grad[j];
    state.v[j] = state.beta2 * state.v[j] + (1.0 - state.beta2) * grad[j] * grad[j];
    const double m_hat = state.m[j] / c1;
    const double v_hat = state.v[j] / c2;
    theta[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

// -- Training loop ----------------------------------------------------------

TrainReport train(const ProblemSpec& spec, const CollocationSet& colloc,
                  const NetworkConfig& net, const TrainConfig& train) {
  return train_from(spec, colloc, net, train, init_params(net, train.seed));
}

TrainReport train_from(const ProblemSpec& spec, const CollocationSet& colloc,
                       const NetworkConfig& net, const TrainConfig& train,
                       ParameterVector initial) {
  net.validate();
  if (net.input_dim != spec.input_dim()) {
    throw ConfigError("input_dim", "network input dimension does not match the problem");
  }
  if (!(initial.layout == ParameterLayout::for_config(net))) {
    throw StructuralError("train: initial parameters do not match the network layout");
  }
  if (train.epochs < 0) throw ConfigError("epochs", "epochs must be >= 0");
  if (!(train.lr > 0.0)) throw ConfigError("lr", "learning rate must be > 0");

  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = train.seed;
  report.config_hash = config_hash(spec, colloc, net, train);
  report.initial_params = initial;
  report.history.reserve(static_cast<std::size_t>(train.epochs));

  const LossEvaluator evaluator(net, LossData::prepare(spec, colloc), train.weights,
                                train.threads, train.chunk);
  ParameterVector theta = std::move(initial);
  std::vector<double> grad(theta.size());
  AdamState adam = AdamState::fresh(theta.size(), train.lr);
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  double initial_total = 0.0;
  for (std::int64_t epoch = 0; epoch < train.epochs; ++epoch) {
    const LossBreakdown loss = evaluator.value_and_gradient(theta.span(), grad);
    report.history.push_back(loss);
    if (epoch == 0) initial_total = loss.total;
    if (!std::isfinite(loss.total) ||
        (initial_total > 0.0 && loss.total > train.divergence_factor * initial_total)) {
      report.history.pop_back();  // kept in final_loss; history covers completed epochs
      report.epochs_run = epoch;
      report.final_params = theta;
      report.final_loss = loss;
      report.diverged = true;
      report.wall_seconds = elapsed();
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                ": loss " + format_real(loss.total),
                            std::move(report));
    }
    adam_step(adam, theta.span(), grad);
    if (train.on_epoch) train.on_epoch(epoch, loss);
    if (train.checkpoint_every > 0 && (epoch + 1) % train.checkpoint_every == 0 &&
        train.on_checkpoint) {
      train.on_checkpoint(epoch + 1, theta);
    }
  }

  report.epochs_run = train.epochs;
  report.final_loss = evaluator.value_and_gradient(theta.span(), grad);
  report.final_params = std::move(theta);
  report.wall_seconds = elapsed();
  return report;
}

void write_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history) {
  out << "epoch,physics,boundary,total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const LossBreakdown& l = history[i];
    out << i << ',' << format_real(l.physics) << ',' << format_real(l.boundary) << ','
        << format_real(l.total) << '\n';
  }
}

}  // namespace dpinn
