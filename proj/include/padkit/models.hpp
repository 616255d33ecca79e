#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "padkit/tensor.hpp"

namespace padkit::models {

class ModelSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Architecture { LivenessNet, AttackNetV1, AttackNetV2_1, AttackNetV2_2 };

/// Canonical display name, e.g. "AttackNetV2_1".
std::string arch_name(Architecture arch);
/// CLI spelling, e.g. "attacknet-v2.1".
std::string arch_flag(Architecture arch);
/// Accepts either spelling, case-insensitive.
Architecture parse_architecture(std::string_view text);
inline constexpr Architecture kAllArchitectures[] = {Architecture::LivenessNet, Architecture::AttackNetV1,
                                                     Architecture::AttackNetV2_1, Architecture::AttackNetV2_2};

enum class LayerKind { Conv, BatchNorm, Activation, MaxPool, Dropout, Flatten, Dense, Merge };
enum class ActivationFn { Relu, LeakyRelu, Tanh, Softmax };
enum class MergeMode { Concat, Add };

struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  std::size_t filters = 0;  // conv
  std::size_t kernel = 3;   // conv
  std::size_t units = 0;    // dense
  double rate = 0.0;        // dropout
  ActivationFn activation = ActivationFn::Relu;
  double alpha = 0.2;  // leaky relu slope
  MergeMode merge = MergeMode::Concat;
  std::size_t source = 0;  // merge: index of the earlier layer whose output joins the running tensor

  static LayerSpec conv(std::size_t filters, std::size_t kernel = 3);
  static LayerSpec batchnorm();
  static LayerSpec activation_of(ActivationFn fn, double alpha = 0.2);
  static LayerSpec maxpool();
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();
  static LayerSpec dense(std::size_t units);
  static LayerSpec merge_with(MergeMode mode, std::size_t source);

  bool operator==(const LayerSpec&) const = default;
};

struct InputShape {
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t channels = 3;
  bool operator==(const InputShape&) const = default;
};

struct ModelSpec {
  Architecture arch = Architecture::LivenessNet;
  InputShape input;
  std::vector<LayerSpec> layers;
  double dropout_conv = 0.25;
  double dropout_dense = 0.5;
  double l2 = 1e-5;

  std::string name() const { return arch_name(arch); }
  bool operator==(const ModelSpec&) const = default;
};

struct ParamCount {
  std::uint64_t trainable = 0;
  std::uint64_t non_trainable = 0;  // batch-norm running mean/variance
  std::uint64_t total() const { return trainable + non_trainable; }
};

/// Per-layer output shapes without the batch axis: (H,W,C) or (D).
/// Throws ModelSpecError on any inconsistency.
std::vector<Shape> infer_shapes(const ModelSpec& spec);
ParamCount count_params(const ModelSpec& spec);

/// Parameter totals reported for the 256x256x3 models.
std::uint64_t reference_param_count(Architecture arch);

struct Hyperparams {
  double dropout_conv = 0.25;
  double dropout_dense = 0.5;
  double l2 = 1e-5;
};

/// Sequential topology shared by every architecture: `block_widths.size()`
/// conv blocks, each ending in 2x2 max-pool and dropout, then a dense head.
/// AttackNet blocks hold three convs; the third conv's output is merged with
/// the output of conv `merge_operand[b]` (1 or 2) of the same block.
struct Topology {
  std::vector<std::size_t> block_widths;
  std::size_t convs_per_block = 2;
  std::vector<std::size_t> merge_operand;  // empty for LivenessNet
  MergeMode merge_mode = MergeMode::Concat;
  std::size_t head_units = 64;

  std::string label() const;
  bool operator==(const Topology&) const = default;
};

ModelSpec build_from_topology(Architecture arch, const Topology& topology, InputShape input, const Hyperparams& hp);

/// The conventional LivenessNet stack.
ModelSpec build_livenessnet(InputShape input = {}, double dropout_conv = 0.25, double dropout_dense = 0.5,
                            double l2 = 1e-5);

struct ReconstructionCandidate {
  Topology topology;
  std::uint64_t params = 0;
  std::int64_t delta = 0;  // params - target
  std::size_t layer_count = 0;
};

struct ReconstructionReport {
  Architecture arch = Architecture::LivenessNet;
  std::uint64_t target = 0;
  InputShape reference_input;
  std::vector<ReconstructionCandidate> candidates;  // enumeration order
  std::vector<std::size_t> exact_matches;           // indices into candidates
  std::size_t chosen = 0;                           // index into candidates
  bool exact() const { return !exact_matches.empty(); }
  const ReconstructionCandidate& chosen_candidate() const { return candidates.at(chosen); }
  /// Empty for an exact match; otherwise a one-line deviation record.
  std::string deviation() const;
};

/// Enumerates the architecture's candidate grid (pool count 2..3, per-block
/// width in {16,32,64} non-decreasing, merge operand per block, dense head
/// width in {64,128}), counts each analytically at `reference_input`, and
/// picks the canonical candidate: exact matches first, then smallest
/// |delta|; ties broken by fewer layers, then label order.
/// Throws ModelSpecError for target 0.
ReconstructionReport reconstruct_to_count(Architecture arch, std::uint64_t target, InputShape reference_input = {});

/// AttackNet builder: topology resolved against the reference parameter
/// count at 256x256x3, then instantiated at `input`. Non-exact resolutions
/// are recorded in `deviation` when provided.
ModelSpec build_attacknet(Architecture variant, InputShape input = {}, const Hyperparams& hp = {},
                          std::string* deviation = nullptr);

/// Dispatches to the builder for `arch`.
ModelSpec build_model(Architecture arch, InputShape input = {}, const Hyperparams& hp = {});

std::string to_text(const ModelSpec& spec);
ModelSpec parse_model_spec(std::string_view text);

/// Markdown table of every candidate, for the reconstruction ledger.
std::string reconstruction_markdown(const ReconstructionReport& report);

}  // namespace padkit::models
