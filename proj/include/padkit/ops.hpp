#pragma once

#include "padkit/autograd.hpp"
#include "padkit/rng.hpp"

namespace padkit {

enum class Mode { Train, Infer };

/// Non-trainable per-channel statistics owned by a batch-norm layer.
template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

struct BatchNormOptions {
  double momentum = 0.99;
  double epsilon = 1e-3;
};

namespace ops {

/// 2-D convolution, stride 1, zero "same" padding.
/// x: [N,H,W,Cin], kernel: [kh,kw,Cin,Cout] with odd kh/kw, bias: [Cout].
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& kernel, const Var<T>& bias);

/// 2x2 max pooling, stride 2. Ties route the gradient to the first maximum
/// in row-major order within the window.
template <typename T>
Var<T> maxpool2(Tape<T>& tape, const Var<T>& x);

/// x: [N,D], weight: [D,U], bias: [U].
template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// Normalizes over every axis but the last. Train mode uses (biased) batch
/// statistics and updates `stats`; infer mode reads them.
template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& stats,
                 Mode mode, const BatchNormOptions& options = {});

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);
template <typename T>
Var<T> leaky_relu(Tape<T>& tape, const Var<T>& x, double alpha);
template <typename T>
Var<T> tanh(Tape<T>& tape, const Var<T>& x);
/// Softmax over the last axis.
template <typename T>
Var<T> softmax(Tape<T>& tape, const Var<T>& x);

/// Concatenates along the channel (last) axis; leading dims must agree.
template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// Inverted dropout: survivors are scaled by 1/(1-rate). Identity in infer mode.
template <typename T>
Var<T> dropout(Tape<T>& tape, const Var<T>& x, double rate, Mode mode, Rng& rng);

/// [N, ...] -> [N, prod(...)].
template <typename T>
Var<T> flatten(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);
/// Scalar sum(x * weights) with constant weights; handy for gradient probes.
template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const Var<T>& x, const Tensor<T>& weights);

}  // namespace ops
}  // namespace padkit
