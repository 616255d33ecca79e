#include "padkit/network.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace padkit {

using models::ActivationFn;
using models::LayerKind;
using models::MergeMode;

template <typename T>
Network<T>::Network(models::ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  const auto shapes = models::infer_shapes(spec_);
  Rng rng(seed);
  Shape prev{spec_.input.height, spec_.input.width, spec_.input.channels};
  slots_.resize(spec_.layers.size());

  auto glorot = [&](const Shape& shape, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<T> w(shape);
    for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return w;
  };
  auto add = [&](std::size_t layer, const char* what, Tensor<T> value) {
    params_.push_back({fmt::format("layer{:02d}.{}", layer, what), Var<T>::leaf(std::move(value), true)});
  };

  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        slots_[i].param = static_cast<int>(params_.size());
        const std::size_t k = l.kernel, cin = prev[2], cout = l.filters;
        add(i, "kernel", glorot({k, k, cin, cout}, k * k * cin, k * k * cout));
        add(i, "bias", Tensor<T>({cout}));
        break;
      }
      case LayerKind::Dense: {
        slots_[i].param = static_cast<int>(params_.size());
        add(i, "kernel", glorot({prev[0], l.units}, prev[0], l.units));
        add(i, "bias", Tensor<T>({l.units}));
        break;
      }
      case LayerKind::BatchNorm: {
        slots_[i].param = static_cast<int>(params_.size());
        slots_[i].stats = static_cast<int>(stats_.size());
        const std::size_t c = prev.back();
        add(i, "gamma", Tensor<T>({c}, T{1}));
        add(i, "beta", Tensor<T>({c}));
        stats_.emplace_back(c);
        stats_names_.push_back(fmt::format("layer{:02d}", i));
        break;
      }
      default:
        break;
    }
    prev = shapes[i];
  }
}

template <typename T>
Var<T> Network<T>::forward(Tape<T>& tape, const Tensor<T>& x, Mode mode, Rng& rng) {
  return run(tape, x, mode, rng, spec_.layers.size());
}

template <typename T>
Tensor<T> Network<T>::embed(const Tensor<T>& x) {
  std::size_t last_dense = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].kind == LayerKind::Dense) last_dense = i;
  }
  Tape<T> tape(false);
  Rng unused(0);
  Tensor<T> out = run(tape, x, Mode::Infer, unused, last_dense).value();
  const std::size_t n = out.shape()[0];
  return out.reshaped({n, out.size() / n});
}

template <typename T>
Var<T> Network<T>::run(Tape<T>& tape, const Tensor<T>& x, Mode mode, Rng& rng, std::size_t stop) {
  const Shape want{spec_.input.height, spec_.input.width, spec_.input.channels};
  if (x.rank() != 4 || Shape(x.shape().begin() + 1, x.shape().end()) != want) {
    throw ShapeError("network input " + shape_to_string(x.shape()) + " does not match model input [N," +
                     std::to_string(want[0]) + "," + std::to_string(want[1]) + "," + std::to_string(want[2]) + "]");
  }
  std::vector<Var<T>> outs;
  outs.reserve(spec_.layers.size());
  Var<T> cur = Var<T>::leaf(x, false);
  for (std::size_t i = 0; i < stop; ++i) {
    const auto& l = spec_.layers[i];
    const auto& s = slots_[i];
    switch (l.kind) {
      case LayerKind::Conv:
        cur = ops::conv2d(tape, cur, params_[s.param].var, params_[s.param + 1].var);
        break;
      case LayerKind::Dense:
        cur = ops::dense(tape, cur, params_[s.param].var, params_[s.param + 1].var);
        break;
      case LayerKind::BatchNorm:
        cur = ops::batchnorm(tape, cur, params_[s.param].var, params_[s.param + 1].var, stats_[s.stats], mode,
                             bn_options_);
        break;
      case LayerKind::Activation:
        switch (l.activation) {
          case ActivationFn::Relu: cur = ops::relu(tape, cur); break;
          case ActivationFn::LeakyRelu: cur = ops::leaky_relu(tape, cur, l.alpha); break;
          case ActivationFn::Tanh: cur = ops::tanh(tape, cur); break;
          case ActivationFn::Softmax: cur = ops::softmax(tape, cur); break;
        }
        break;
      case LayerKind::MaxPool:
        cur = ops::maxpool2(tape, cur);
        break;
      case LayerKind::Dropout:
        cur = ops::dropout(tape, cur, l.rate, mode, rng);
        break;
      case LayerKind::Flatten:
        cur = ops::flatten(tape, cur);
        break;
      case LayerKind::Merge:
        cur = l.merge == MergeMode::Add ? ops::add(tape, cur, outs[l.source])
                                        : ops::concat_channels(tape, cur, outs[l.source]);
        break;
    }
    outs.push_back(cur);
  }
  return cur;
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& x) {
  Tape<T> tape(false);
  Rng unused(0);
  return forward(tape, x, Mode::Infer, unused).value();
}

template <typename T>
std::size_t Network<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::state() const {
  std::vector<NamedTensor<T>> out;
  out.reserve(params_.size() + 2 * stats_.size());
  for (const auto& p : params_) out.push_back({p.name, p.var.value()});
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    out.push_back({stats_names_[i] + ".running_mean", stats_[i].running_mean});
    out.push_back({stats_names_[i] + ".running_var", stats_[i].running_var});
  }
  return out;
}

template <typename T>
void Network<T>::load_state(const std::vector<NamedTensor<T>>& entries) {
  if (entries.size() != params_.size() + 2 * stats_.size()) {
    throw std::runtime_error(fmt::format("state has {} entries, network expects {}", entries.size(),
                                         params_.size() + 2 * stats_.size()));
  }
  auto check = [](const NamedTensor<T>& e, const std::string& name, const Tensor<T>& into) {
    if (e.name != name) throw std::runtime_error("state entry '" + e.name + "' where '" + name + "' was expected");
    if (e.tensor.shape() != into.shape()) {
      throw std::runtime_error("state entry '" + name + "' has shape " + shape_to_string(e.tensor.shape()) +
                               ", expected " + shape_to_string(into.shape()));
    }
  };
  std::size_t k = 0;
  for (auto& p : params_) {
    check(entries[k], p.name, p.var.value());
    p.var.value() = entries[k++].tensor;
  }
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    check(entries[k], stats_names_[i] + ".running_mean", stats_[i].running_mean);
    stats_[i].running_mean = entries[k++].tensor;
    check(entries[k], stats_names_[i] + ".running_var", stats_[i].running_var);
    stats_[i].running_var = entries[k++].tensor;
  }
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template class Network<float>;
template class Network<double>;

}  // namespace padkit
