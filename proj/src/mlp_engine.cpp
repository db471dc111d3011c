#include "dpinn/mlp_engine.hpp"

namespace dpinn {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

// Eigen's tanh is scalar for doubles; this form runs on the vectorized exp.
// Absolute error stays at rounding level; relative error grows like
// 1e-16 / |x| near zero.
template <class In, class Out>
void tanh_into(const In& a, Out h) {
  const ArrayXXd e = (-2.0 * a.abs()).exp();
  h = (1.0 - e) / (1.0 + e) * a.sign();
}

}  // namespace

ChannelLayout::ChannelLayout(int input_dim, bool with_derivatives)
    : input_dim_(input_dim), with_derivatives_(with_derivatives) {
  if (!with_derivatives_) {
    count_ = 1;
    return;
  }
  int c = 1 + input_dim_;
  for (int k = 0; k < spatial_dim(); ++k) {
    for (int l = k; l < spatial_dim(); ++l) pairs_.push_back({k, l, c++});
  }
  count_ = c;
}

int ChannelLayout::pair(int k, int l) const {
  if (k > l) std::swap(k, l);
  for (const Pair& p : pairs_) {
    if (p.k == k && p.l == l) return p.channel;
  }
  throw StructuralError("ChannelLayout: no second-derivative channel for this pair");
}

BatchEngine::BatchEngine(const NetworkConfig& config, bool with_derivatives)
    : config_(config),
      layout_(ParameterLayout::for_config(config)),
      channels_(config.input_dim, with_derivatives) {}

void BatchEngine::check_theta(std::span<const double> theta) const {
  if (theta.size() != layout_.total) {
    throw StructuralError("BatchEngine: parameter count does not match network layout");
  }
}

Eigen::Map<const MatrixXd> BatchEngine::forward(std::span<const double> theta,
                                                const Eigen::Ref<const PointMatrix>& points,
                                                Workspace& ws) const {
  check_theta(theta);
  const int d = config_.input_dim;
  if (points.rows() != d) throw StructuralError("BatchEngine: input dimension mismatch");
  const Index B = points.cols();
  const Index C = channels_.count();
  const std::size_t n_maps = layout_.layers.size();
  const bool tanh_act = config_.hidden_activation == Activation::kTanh;

  ws.pre.resize(n_maps - 1);
  ws.post.resize(n_maps);
  ws.s1.resize(n_maps - 1);
  ws.s2.resize(n_maps - 1);
  ws.weights.resize(n_maps);
  for (std::size_t l = 0; l < n_maps; ++l) {
    const LayerSlice& s = layout_.layers[l];
    ws.weights[l] = Eigen::Map<const MatrixXd>(theta.data() + s.weight_offset, s.rows, s.cols);
  }

  MatrixXd& h0 = ws.post[0];
  h0.setZero(d, C * B);
  if (config_.input_scale.empty()) {
    h0.leftCols(B) = points;
  } else {
    for (int k = 0; k < d; ++k) {
      h0.row(k).head(B).array() =
          (points.row(k).array() - config_.input_shift[static_cast<std::size_t>(k)]) *
          config_.input_scale[static_cast<std::size_t>(k)];
    }
  }
  if (channels_.with_derivatives()) {
    for (int k = 0; k < d; ++k) {
      const double s =
          config_.input_scale.empty() ? 1.0 : config_.input_scale[static_cast<std::size_t>(k)];
      h0.block(k, channels_.first(k) * B, 1, B).setConstant(s);
    }
  }

  for (std::size_t l = 0; l + 1 < n_maps; ++l) {
    const LayerSlice& s = layout_.layers[l];
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(theta.data() + s.bias_offset, s.rows);
    MatrixXd& a = ws.pre[l];
    a.resize(s.rows, C * B);
    a.noalias() = ws.weights[l] * ws.post[l];
    a.leftCols(B).colwise() += b;

    MatrixXd& h = ws.post[l + 1];
    h.resize(s.rows, C * B);
    ArrayXXd& s1 = ws.s1[l];
    ArrayXXd& s2 = ws.s2[l];
    if (tanh_act) {
      tanh_into(a.leftCols(B).array(), h.leftCols(B).array());
      s1 = 1.0 - h.leftCols(B).array().square();
      s2 = -2.0 * h.leftCols(B).array() * s1;
    } else {
      h.leftCols(B) = a.leftCols(B);
      s1.setOnes(s.rows, B);
      s2.setZero(s.rows, B);
    }
    if (!channels_.with_derivatives()) continue;
    auto blk = [&](MatrixXd& m, int c) { return m.block(0, c * B, s.rows, B).array(); };
    for (int k = 0; k < d; ++k) {
      const int c = channels_.first(k);
      blk(h, c) = s1 * blk(a, c);
    }
    for (const ChannelLayout::Pair& p : channels_.pairs()) {
      blk(h, p.channel) =
          s1 * blk(a, p.channel) + s2 * blk(a, channels_.first(p.k)) * blk(a, channels_.first(p.l));
    }
  }

  const LayerSlice& last = layout_.layers.back();
  ws.out.resize(1, C * B);
  ws.out.noalias() = ws.weights.back() * ws.post[n_maps - 1];
  ws.out.leftCols(B).array() += theta[last.bias_offset];
  return Eigen::Map<const MatrixXd>(ws.out.data(), B, C);
}

void BatchEngine::forward_backward(std::span<const double> theta,
                                   const Eigen::Ref<const PointMatrix>& points,
                                   const AdjointFn& adjoint, Index first, std::span<double> grad,
                                   Workspace& ws) const {
  if (grad.size() != layout_.total) {
    throw StructuralError("BatchEngine: gradient buffer does not match network layout");
  }
  const Index B = points.cols();
  const Index C = channels_.count();
  auto outputs = forward(theta, points, ws);
  ws.out_bar.setZero(1, C * B);
  {
    Eigen::Map<MatrixXd> ob(ws.out_bar.data(), B, C);
    adjoint(outputs, ob, first);
  }

  const std::size_t n_maps = layout_.layers.size();
  const bool tanh_act = config_.hidden_activation == Activation::kTanh;
  const int d = config_.input_dim;

  {
    const LayerSlice& s = layout_.layers.back();
    Eigen::Map<MatrixXd> gw(grad.data() + s.weight_offset, s.rows, s.cols);
    ws.grad_w.noalias() = ws.out_bar * ws.post[n_maps - 1].transpose();
    gw += ws.grad_w;
    grad[s.bias_offset] += ws.out_bar.leftCols(B).sum();
    if (n_maps == 1) return;
    ws.bar_h.noalias() = ws.weights.back().transpose() * ws.out_bar;
  }

  for (std::size_t li = n_maps - 1; li-- > 0;) {
    const LayerSlice& s = layout_.layers[li];
    const MatrixXd& a = ws.pre[li];
    const ArrayXXd& s1 = ws.s1[li];
    const ArrayXXd& s2 = ws.s2[li];
    MatrixXd& bar_h = ws.bar_h;
    MatrixXd& bar_a = ws.bar_a;
    bar_a.resize(s.rows, C * B);

    auto cblk = [&](const MatrixXd& m, int c) { return m.block(0, c * B, s.rows, B).array(); };
    auto blk = [&](MatrixXd& m, int c) { return m.block(0, c * B, s.rows, B).array(); };

    blk(bar_a, 0) = cblk(bar_h, 0) * s1;
    if (channels_.with_derivatives()) {
      for (int k = 0; k < d; ++k) {
        const int c = channels_.first(k);
        blk(bar_a, c) = cblk(bar_h, c) * s1;
        blk(bar_a, 0) += s2 * cblk(bar_h, c) * cblk(a, c);
      }
      ArrayXXd s3;
      if (tanh_act) {
        const auto h0 = ws.post[li + 1].leftCols(B).array();
        s3 = -2.0 * s1.square() - 2.0 * h0 * s2;
      } else {
        s3.setZero(s.rows, B);
      }
      for (const ChannelLayout::Pair& p : channels_.pairs()) {
        const int ck = channels_.first(p.k);
        const int cl = channels_.first(p.l);
        const auto hb = cblk(bar_h, p.channel);
        blk(bar_a, p.channel) = hb * s1;
        if (p.k == p.l) {
          blk(bar_a, ck) += 2.0 * s2 * hb * cblk(a, ck);
        } else {
          blk(bar_a, ck) += s2 * hb * cblk(a, cl);
          blk(bar_a, cl) += s2 * hb * cblk(a, ck);
        }
        blk(bar_a, 0) += hb * (s2 * cblk(a, p.channel) + s3 * cblk(a, ck) * cblk(a, cl));
      }
    }

    Eigen::Map<MatrixXd> gw(grad.data() + s.weight_offset, s.rows, s.cols);
    ws.grad_w.noalias() = bar_a * ws.post[li].transpose();
    gw += ws.grad_w;
    ws.grad_b.noalias() = bar_a.leftCols(B).rowwise().sum();
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + s.bias_offset, s.rows);
    gb += ws.grad_b;
    if (li > 0) bar_h.noalias() = ws.weights[li].transpose() * bar_a;
  }
}

Eigen::VectorXd BatchEngine::values(std::span<const double> theta, const PointMatrix& points,
                                    Index chunk) const {
  if (channels_.with_derivatives()) {
    return BatchEngine(config_, false).values(theta, points, chunk);
  }
  Eigen::VectorXd out(points.cols());
  Workspace ws;
  for (Index start = 0; start < points.cols(); start += chunk) {
    const Index n = std::min(chunk, points.cols() - start);
    auto o = forward(theta, points.middleCols(start, n), ws);
    out.segment(start, n) = o.col(0);
  }
  return out;
}

DerivativeBundle BatchEngine::to_bundle(const Eigen::Ref<const MatrixXd>& outputs,
                                        Index row) const {
  const int n = channels_.spatial_dim();
  DerivativeBundle b = DerivativeBundle::zero(n);
  b.value = outputs(row, 0);
  if (!channels_.with_derivatives()) return b;
  b.du_dt = outputs(row, channels_.time());
  for (int k = 0; k < n; ++k) b.grad_x(k) = outputs(row, channels_.first(k));
  for (const ChannelLayout::Pair& p : channels_.pairs()) {
    b.hess_x(p.k, p.l) = outputs(row, p.channel);
    b.hess_x(p.l, p.k) = outputs(row, p.channel);
  }
  return b;
}

std::vector<DerivativeBundle> BatchEngine::bundles(std::span<const double> theta,
                                                   const PointMatrix& points,
                                                   Index chunk) const {
  if (!channels_.with_derivatives()) {
    throw StructuralError("BatchEngine::bundles needs an engine with derivative channels");
  }
  std::vector<DerivativeBundle> out;
  out.reserve(static_cast<std::size_t>(points.cols()));
  Workspace ws;
  for (Index start = 0; start < points.cols(); start += chunk) {
    const Index n = std::min(chunk, points.cols() - start);
    auto o = forward(theta, points.middleCols(start, n), ws);
    for (Index r = 0; r < n; ++r) out.push_back(to_bundle(o, r));
  }
  return out;
}

}  // namespace dpinn
