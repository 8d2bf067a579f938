#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wattcast/dataset.hpp"
#include "wattcast/models/spec.hpp"
#include "wattcast/nn/init.hpp"
#include "wattcast/nn/ops.hpp"

namespace wattcast::models {

using nn::Param;
using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::Var;

/// Train-time switches for one forward pass.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  ///< dropout source; required when training with dropout > 0
};

/// Ordered parameter storage. Layers refer to entries by index so that a
/// model can be copied (e.g. to snapshot the best epoch) without fixups.
class ParamSet {
 public:
  std::size_t add(std::string id, Tensor value) {
    params_.emplace_back(std::move(id), std::move(value));
    return params_.size() - 1;
  }

  Var bind(Tape& tape, std::size_t index) { return tape.param(params_[index]); }

  std::span<Param> all() noexcept { return params_; }
  std::span<const Param> all() const noexcept { return params_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::vector<Param> params_;
};

namespace layers {

/// y = x W + b over the last axis.
struct Dense {
  std::size_t w = 0, b = 0;

  static Dense create(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    Dense d;
    d.w = ps.add(name + ".w", nn::glorot_uniform({in, out}, in, out, rng));
    d.b = ps.add(name + ".b", Tensor({out}));
    return d;
  }

  Var operator()(Tape& tape, ParamSet& ps, Var x) const {
    return nn::add(nn::matmul(x, ps.bind(tape, w)), ps.bind(tape, b));
  }
};

/// Convolution over time with bias; weight shape (K, C_in, C_out).
struct Conv {
  std::size_t w = 0, b = 0;
  std::size_t dilation = 1;

  static Conv create(ParamSet& ps, const std::string& name, std::size_t kernel, std::size_t in, std::size_t out,
                     std::size_t dilation, Rng& rng) {
    Conv c;
    c.w = ps.add(name + ".w", nn::glorot_uniform({kernel, in, out}, kernel * in, kernel * out, rng));
    c.b = ps.add(name + ".b", Tensor({out}));
    c.dilation = dilation;
    return c;
  }

  Var operator()(Tape& tape, ParamSet& ps, Var x) const {
    return nn::add(nn::conv1d(x, ps.bind(tape, w), dilation, nn::Padding::causal), ps.bind(tape, b));
  }
};

/// Standard LSTM layer, gate order (input, forget, cell candidate, output).
/// Parameters: W_x (I, 4H), W_h (H, 4H), b (4H) with forget bias 1.
struct Lstm {
  std::size_t wx = 0, wh = 0, b = 0;
  std::size_t units = 0;

  static Lstm create(ParamSet& ps, const std::string& name, std::size_t in, std::size_t units, Rng& rng) {
    Lstm l;
    l.units = units;
    l.wx = ps.add(name + ".wx", nn::glorot_uniform({in, 4 * units}, in, 4 * units, rng));
    l.wh = ps.add(name + ".wh", nn::glorot_uniform({units, 4 * units}, units, 4 * units, rng));
    Tensor bias({4 * units});
    for (std::size_t i = units; i < 2 * units; ++i) bias[i] = 1.0;
    l.b = ps.add(name + ".b", std::move(bias));
    return l;
  }

  /// x: (B, T, I). Returns the hidden sequence (B, T, H) when
  /// `return_sequence`, else the final hidden state (B, H).
  Var operator()(Tape& tape, ParamSet& ps, Var x, bool return_sequence) const {
    const std::size_t T = x.shape()[1];
    const std::size_t H = units;
    const Var projected = nn::add(nn::matmul(x, ps.bind(tape, wx)), ps.bind(tape, b));  // (B, T, 4H)
    const Var w_h = ps.bind(tape, wh);
    Var h{}, c{};
    std::vector<Var> outputs;
    if (return_sequence) outputs.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      Var gates = nn::select(projected, 1, t);
      if (t > 0) gates = nn::add(gates, nn::matmul(h, w_h));
      const Var i = nn::sigmoid(nn::slice(gates, 1, 0, H));
      const Var g = nn::tanh(nn::slice(gates, 1, 2 * H, H));
      const Var o = nn::sigmoid(nn::slice(gates, 1, 3 * H, H));
      if (t == 0) {
        c = nn::mul(i, g);
      } else {
        const Var f = nn::sigmoid(nn::slice(gates, 1, H, H));
        c = nn::add(nn::mul(f, c), nn::mul(i, g));
      }
      h = nn::mul(o, nn::tanh(c));
      if (return_sequence) outputs.push_back(h);
    }
    return return_sequence ? nn::stack(outputs, 1) : h;
  }
};

}  // namespace layers

namespace detail {

struct LstmNet {
  std::vector<layers::Lstm> stack;
  layers::Dense hidden, out;
};

struct CnnNet {
  std::vector<layers::Conv> blocks;
  layers::Dense hidden, out;
};

struct CnnLstmNet {
  layers::Conv front;
  std::vector<layers::Lstm> stack;
  layers::Dense hidden, out;
};

struct TcnBlock {
  layers::Conv first, second;
  bool has_projection = false;
  layers::Dense projection;  ///< 1x1 convolution on the skip path
};

struct TcnNet {
  std::vector<TcnBlock> blocks;
  layers::Dense out;
};

}  // namespace detail

/// A built model: spec, parameters, and the family-specific layer graph.
class Forecaster {
 public:
  explicit Forecaster(const ModelSpec& spec) : spec_(spec) {
    spec_.validate();
    Rng rng(spec_.seed);
    switch (spec_.family) {
      case Family::lstm: net_ = build_lstm(rng); break;
      case Family::cnn: net_ = build_cnn(rng); break;
      case Family::cnn_lstm: net_ = build_cnn_lstm(rng); break;
      case Family::tcn: net_ = build_tcn(rng); break;
    }
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  /// For TCN models the causal receptive field; otherwise the window length.
  std::size_t receptive_field() const {
    return spec_.family == Family::tcn ? tcn_receptive_field(spec_.kernel_size, spec_.tcn_levels())
                                       : spec_.n_timesteps;
  }

  /// batch (B, n_timesteps, 1) -> predictions (B,) on the normalized scale.
  Var forward(Tape& tape, Var batch, const ForwardContext& ctx = {}) {
    check_input(batch.shape());
    return std::visit([&](const auto& net) { return run(net, tape, batch, ctx); }, net_);
  }

  Var forward(Tape& tape, const Tensor& batch, const ForwardContext& ctx = {}) {
    return forward(tape, tape.constant(batch), ctx);
  }

  /// TCN only: head applied at every timestep, (B, T). Entry t depends only
  /// on inputs at positions <= t.
  Var sequence_outputs(Tape& tape, Var batch, const ForwardContext& ctx = {}) {
    check_input(batch.shape());
    const auto* net = std::get_if<detail::TcnNet>(&net_);
    if (net == nullptr) throw ConfigError("sequence_outputs is only defined for TCN models");
    const Var features = tcn_features(*net, tape, batch, ctx);  // (B, T, C)
    const Var y = net->out(tape, params_, features);             // (B, T, 1)
    return nn::reshape(y, {y.shape()[0], y.shape()[1]});
  }

  /// Eval-mode predictions for every sample, in batches.
  std::vector<double> predict(const WindowTensor& data, std::size_t batch_size = 256) {
    if (data.n_timesteps != spec_.n_timesteps)
      throw ShapeError("predict: data window " + std::to_string(data.n_timesteps) + " does not match model window " +
                       std::to_string(spec_.n_timesteps));
    std::vector<double> out;
    out.reserve(data.n_samples);
    for (std::size_t start = 0; start < data.n_samples; start += batch_size) {
      const std::size_t n = std::min(batch_size, data.n_samples - start);
      Tensor batch = batch_inputs(data, start, n);
      Tape tape(false);
      const Var y = forward(tape, batch);
      for (double v : y.value().data()) out.push_back(v);
    }
    return out;
  }

  /// Copies `n` consecutive samples starting at `start` into (n, T, 1).
  static Tensor batch_inputs(const WindowTensor& data, std::size_t start, std::size_t n) {
    const std::size_t row = data.n_timesteps * data.n_features;
    std::vector<double> buf(data.inputs.begin() + static_cast<std::ptrdiff_t>(start * row),
                            data.inputs.begin() + static_cast<std::ptrdiff_t>((start + n) * row));
    return Tensor({n, data.n_timesteps, data.n_features}, std::move(buf));
  }

 private:
  using Net = std::variant<detail::LstmNet, detail::CnnNet, detail::CnnLstmNet, detail::TcnNet>;

  void check_input(const Shape& s) const {
    if (s.size() != 3 || s[1] != spec_.n_timesteps || s[2] != 1)
      throw ShapeError("forward: expected input (B, " + std::to_string(spec_.n_timesteps) + ", 1), got " +
                       nn::shape_str(s));
  }

  Var drop(Var x, const ForwardContext& ctx) const {
    if (!ctx.training || spec_.dropout == 0.0) return x;
    if (ctx.rng == nullptr) throw ConfigError("forward: training with dropout requires an RNG");
    return nn::dropout(x, spec_.dropout, true, *ctx.rng);
  }

  Var head(const layers::Dense& hidden, const layers::Dense& out, Tape& tape, Var features) {
    const Var h = nn::relu(hidden(tape, params_, features));
    const Var y = out(tape, params_, h);  // (B, 1)
    return nn::reshape(y, {y.shape()[0]});
  }

  Var run_lstm_stack(const std::vector<layers::Lstm>& stack, Tape& tape, Var x, const ForwardContext& ctx) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      const bool last = l + 1 == stack.size();
      x = drop(stack[l](tape, params_, x, !last), ctx);
    }
    return x;  // (B, H)
  }

  Var run(const detail::LstmNet& net, Tape& tape, Var x, const ForwardContext& ctx) {
    return head(net.hidden, net.out, tape, run_lstm_stack(net.stack, tape, x, ctx));
  }

  Var run(const detail::CnnNet& net, Tape& tape, Var x, const ForwardContext& ctx) {
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
      if (i > 0) x = nn::max_pool1d(x, 2);
      x = nn::relu(net.blocks[i](tape, params_, x));
    }
    const auto& s = x.shape();
    x = drop(nn::reshape(x, {s[0], s[1] * s[2]}), ctx);
    return head(net.hidden, net.out, tape, x);
  }

  Var run(const detail::CnnLstmNet& net, Tape& tape, Var x, const ForwardContext& ctx) {
    x = nn::relu(net.front(tape, params_, x));
    return head(net.hidden, net.out, tape, run_lstm_stack(net.stack, tape, x, ctx));
  }

  Var tcn_features(const detail::TcnNet& net, Tape& tape, Var x, const ForwardContext& ctx) {
    for (const auto& block : net.blocks) {
      Var y = drop(nn::relu(block.first(tape, params_, x)), ctx);
      y = drop(nn::relu(block.second(tape, params_, y)), ctx);
      const Var skip = block.has_projection ? block.projection(tape, params_, x) : x;
      x = nn::relu(nn::add(y, skip));
    }
    return x;
  }

  Var run(const detail::TcnNet& net, Tape& tape, Var x, const ForwardContext& ctx) {
    const Var features = tcn_features(net, tape, x, ctx);
    const Var last = nn::select(features, 1, features.shape()[1] - 1);  // (B, C)
    const Var y = net.out(tape, params_, last);
    return nn::reshape(y, {y.shape()[0]});
  }

  std::vector<layers::Lstm> build_stack(const std::string& prefix, std::size_t in, Rng& rng) {
    std::vector<layers::Lstm> stack;
    for (std::size_t l = 0; l < spec_.lstm_layers; ++l) {
      stack.push_back(layers::Lstm::create(params_, prefix + std::to_string(l), in, spec_.lstm_units, rng));
      in = spec_.lstm_units;
    }
    return stack;
  }

  detail::LstmNet build_lstm(Rng& rng) {
    detail::LstmNet net;
    net.stack = build_stack("lstm", 1, rng);
    net.hidden = layers::Dense::create(params_, "mlp", spec_.lstm_units, spec_.mlp_units, rng);
    net.out = layers::Dense::create(params_, "out", spec_.mlp_units, 1, rng);
    return net;
  }

  detail::CnnNet build_cnn(Rng& rng) {
    detail::CnnNet net;
    std::size_t in = 1;
    for (std::size_t i = 0; i < spec_.conv_blocks; ++i) {
      net.blocks.push_back(
          layers::Conv::create(params_, "conv" + std::to_string(i), spec_.kernel_size, in, spec_.filters, 1, rng));
      in = spec_.filters;
    }
    net.hidden =
        layers::Dense::create(params_, "mlp", spec_.cnn_output_length() * spec_.filters, spec_.mlp_units, rng);
    net.out = layers::Dense::create(params_, "out", spec_.mlp_units, 1, rng);
    return net;
  }

  detail::CnnLstmNet build_cnn_lstm(Rng& rng) {
    detail::CnnLstmNet net;
    net.front = layers::Conv::create(params_, "conv", spec_.kernel_size, 1, spec_.filters, 1, rng);
    net.stack = build_stack("lstm", spec_.filters, rng);
    net.hidden = layers::Dense::create(params_, "mlp", spec_.lstm_units, spec_.mlp_units, rng);
    net.out = layers::Dense::create(params_, "out", spec_.mlp_units, 1, rng);
    return net;
  }

  detail::TcnNet build_tcn(Rng& rng) {
    detail::TcnNet net;
    std::size_t in = 1;
    const std::size_t ch = spec_.filters;
    for (std::size_t i = 0; i < spec_.tcn_levels(); ++i) {
      const std::size_t dilation = std::size_t{1} << i;
      const std::string name = "tcn" + std::to_string(i);
      detail::TcnBlock block;
      block.first = layers::Conv::create(params_, name + ".conv1", spec_.kernel_size, in, ch, dilation, rng);
      block.second = layers::Conv::create(params_, name + ".conv2", spec_.kernel_size, ch, ch, dilation, rng);
      if (in != ch) {
        block.has_projection = true;
        block.projection = layers::Dense::create(params_, name + ".skip", in, ch, rng);
      }
      net.blocks.push_back(block);
      in = ch;
    }
    net.out = layers::Dense::create(params_, "out", ch, 1, rng);
    return net;
  }

  ModelSpec spec_;
  ParamSet params_;
  Net net_;
};

/// Builds a forecaster with deterministic initialization from spec.seed.
inline Forecaster build(const ModelSpec& spec) { return Forecaster(spec); }

}  // namespace wattcast::models
