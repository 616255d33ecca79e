#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "padkit/models.hpp"
#include "padkit/ops.hpp"
#include "padkit/weights_io.hpp"

namespace padkit {

template <typename T>
struct Parameter {
  std::string name;  // e.g. "layer03.kernel"
  Var<T> var;
};

/// Parameter store plus forward pass for a ModelSpec.
///
/// Kernels are Glorot-uniform, biases and beta zero, gamma one. Every draw
/// comes from Rng(seed), so two networks built from the same spec and seed
/// are bit-identical.
template <typename T>
class Network {
 public:
  explicit Network(models::ModelSpec spec, std::uint64_t seed = 42);

  const models::ModelSpec& spec() const noexcept { return spec_; }

  /// x: [N,H,W,C] matching the spec input. Returns softmax probabilities [N,2].
  Var<T> forward(Tape<T>& tape, const Tensor<T>& x, Mode mode, Rng& rng);

  /// Inference-mode probabilities without gradient bookkeeping.
  Tensor<T> predict(const Tensor<T>& x);

  /// Inference-mode output of the layer feeding the final dense layer,
  /// flattened to [N,D]. Used for feature-space projections.
  Tensor<T> embed(const Tensor<T>& x);

  std::vector<Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }

  std::size_t trainable_count() const;

  /// Trainable parameters followed by batch-norm running statistics.
  std::vector<NamedTensor<T>> state() const;
  /// Throws std::runtime_error when names or shapes disagree with this network.
  void load_state(const std::vector<NamedTensor<T>>& entries);

  void zero_grad();

  const BatchNormOptions& batchnorm_options() const noexcept { return bn_options_; }
  void set_batchnorm_options(const BatchNormOptions& options) { bn_options_ = options; }

 private:
  struct LayerSlot {
    int param = -1;  // first index into params_, or -1
    int stats = -1;  // index into stats_ for batch norm
  };

  Var<T> run(Tape<T>& tape, const Tensor<T>& x, Mode mode, Rng& rng, std::size_t stop);

  models::ModelSpec spec_;
  std::vector<Parameter<T>> params_;
  std::vector<BatchNormStats<T>> stats_;
  std::vector<std::string> stats_names_;
  std::vector<LayerSlot> slots_;
  BatchNormOptions bn_options_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace padkit
