#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "padkit/common.hpp"
#include "padkit/imgproc.hpp"
#include "padkit/models.hpp"
#include "padkit/network.hpp"

namespace padkit::train {

/// A NaN or infinity in the loss or a gradient. Training stops on the spot.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Dataset { Custom, ReplayAttack, Csmad, Mad3d, MsSpoof, Combined };

/// "custom", "replay-attack", "csmad", "3dmad", "msspoof", "combined".
std::string dataset_flag(Dataset d);
Dataset parse_dataset(std::string_view text);
inline constexpr Dataset kAllDatasets[] = {Dataset::Custom, Dataset::ReplayAttack, Dataset::Csmad,
                                           Dataset::Mad3d,  Dataset::MsSpoof,      Dataset::Combined};

struct TrainConfig {
  double learning_rate = 1e-6;
  double dropout = 0.2;  // both the conv-block and the dense-head dropout
  double l2 = 1e-5;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 20;
  std::size_t early_stop_patience = 15;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 7;
  double plateau_min_delta = 1e-4;
  double min_lr = 1e-9;
  double label_smoothing = 0.1;
  // Running-average momentum for batch norm. Short runs leave 0.99 averages
  // far from the batch statistics, so inference drifts from training.
  double bn_momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;
  bool augment = true;
  img::AugmentPolicy augment_policy;
  std::uint64_t seed = 42;

  /// Throws std::invalid_argument. A learning rate of exactly 0 is accepted
  /// (frozen control run); otherwise min_lr <= learning_rate.
  void validate() const;

  /// One "key value" line per field, stable order. Used as the checkpoint
  /// snapshot and hashed into run fingerprints.
  std::string to_text() const;

  /// Sets one field by its to_text key. Throws std::invalid_argument for an
  /// unknown key or a value that does not parse.
  void set(std::string_view key, std::string_view value);

  models::Hyperparams hyperparams() const { return {dropout, dropout, l2}; }
};

/// Published per-dataset settings; Combined uses batch 16.
TrainConfig preset(models::Architecture arch, Dataset dataset);

// ---- loss ---------------------------------------------------------------

/// Class index used by the network output: 0 bona fide, 1 attack.
inline int class_index(Label l) { return l == Label::Attack ? 1 : 0; }

/// Mean over the batch of -sum_k t_k log(max(p_k, 1e-12)) with
/// t = (1-alpha) onehot + alpha/K. probs: [N,K]. Returns shape [1].
template <typename T>
Var<T> smoothed_cross_entropy(Tape<T>& tape, const Var<T>& probs, const std::vector<int>& labels, double alpha);

/// lambda * sum of squares over every parameter. Returns shape [1].
template <typename T>
Var<T> l2_penalty(Tape<T>& tape, const std::vector<Parameter<T>>& params, double lambda);

/// Plain value of the penalty above, without touching a tape.
template <typename T>
double l2_value(const std::vector<Parameter<T>>& params, double lambda);

// ---- optimizer and schedules -------------------------------------------

/// Bias-corrected Adam. Parameters are visited in declaration order.
template <typename T>
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-7)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  /// Parameters without a gradient are stepped with g = 0. Throws
  /// NonFiniteError before touching anything if a gradient is not finite.
  void step(std::vector<Parameter<T>>& params, double lr);

  std::uint64_t steps() const noexcept { return t_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

/// Halves (by `factor`) the learning rate after `patience` epochs in which
/// the monitored loss failed to beat the best by more than min_delta.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, std::size_t patience, double min_lr, double min_delta = 1e-4);

  /// Feeds one epoch's validation loss; returns the learning rate to use next.
  double update(double val_loss, double lr);

  std::size_t wait() const noexcept { return wait_; }

 private:
  double factor_, min_lr_, min_delta_;
  std::size_t patience_;
  double best_;
  std::size_t wait_ = 0;
};

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Feeds one epoch's validation loss; true once `patience` epochs have
  /// passed without a strictly lower value.
  bool update(double val_loss);

  /// 1-based epoch of the lowest loss seen so far (0 before any update).
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }

 private:
  std::size_t patience_;
  double best_;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t wait_ = 0;
};

// ---- data and loop ------------------------------------------------------

struct ImageSet {
  std::vector<img::ImageU8> images;
  std::vector<Label> labels;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return images.size(); }
  void add(img::ImageU8 image, Label label, std::string id);
};

/// [N,H,W,3] float tensor scaled to [0,1] from the listed indices.
Tensor<float> to_tensor(const std::vector<img::ImageU8>& images, const std::vector<std::size_t>& indices);

struct EvalResult {
  double loss = 0.0;  // smoothed cross-entropy plus the L2 term
  double accuracy = 0.0;
};

/// Inference-mode pass over a whole set.
EvalResult evaluate(Network<float>& net, const ImageSet& set, const TrainConfig& cfg, std::size_t batch = 64);

/// p(bona fide) per image, inference mode.
std::vector<double> predict_scores(Network<float>& net, const ImageSet& set, std::size_t batch = 64);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;  // rate used during this epoch
  double wall_seconds = 0.0;
  bool best = false;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double best_val_acc = 0.0;
  double seconds = 0.0;
  bool stopped_early = false;
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Runs the epoch loop and leaves `net` holding the best-validation weights.
/// Throws DataError for an empty set and NonFiniteError on divergence.
TrainResult train_loop(Network<float>& net, const ImageSet& train, const ImageSet& val, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

/// epoch,train_loss,train_acc,val_loss,val_acc,lr,best. Wall time is kept
/// out so that reruns with the same seed produce identical files.
void write_epoch_csv(std::ostream& os, const std::vector<EpochLog>& log);
/// epoch,seconds
void write_timing_csv(std::ostream& os, const std::vector<EpochLog>& log);

}  // namespace padkit::train
