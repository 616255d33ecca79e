#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "padkit/trainer.hpp"

namespace padkit::train {

namespace {

std::vector<int> batch_labels(const ImageSet& set, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(class_index(set.labels[i]));
  return out;
}

std::size_t count_correct(const Tensor<float>& probs, const std::vector<int>& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = probs[i * 2 + 1] > probs[i * 2] ? 1 : 0;
    hits += pred == labels[i];
  }
  return hits;
}

void check_set(const ImageSet& set, const char* what) {
  if (set.size() == 0) throw DataError(std::string(what) + " set is empty");
  if (set.labels.size() != set.size()) throw DataError(std::string(what) + " set has mismatched label count");
}

}  // namespace

void ImageSet::add(img::ImageU8 image, Label label, std::string id) {
  images.push_back(std::move(image));
  labels.push_back(label);
  ids.push_back(std::move(id));
}

Tensor<float> to_tensor(const std::vector<img::ImageU8>& images, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("to_tensor: no images");
  const auto& first = images.at(indices[0]);
  const std::size_t h = first.height, w = first.width, plane = h * w * 3;
  Tensor<float> t({indices.size(), h, w, 3});
  float* out = t.raw();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& im = images.at(indices[k]);
    if (im.height != h || im.width != w) {
      throw ShapeError(fmt::format("to_tensor: image {}x{} in a {}x{} batch", im.height, im.width, h, w));
    }
    for (std::size_t i = 0; i < plane; ++i) out[k * plane + i] = static_cast<float>(im.pixels[i]) / 255.0f;
  }
  return t;
}

EvalResult evaluate(Network<float>& net, const ImageSet& set, const TrainConfig& cfg, std::size_t batch) {
  check_set(set, "evaluation");
  double loss_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < set.size(); start += batch) {
    std::vector<std::size_t> idx(std::min(batch, set.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto labels = batch_labels(set, idx);
    Tape<float> tape(false);
    Rng unused(0);
    auto probs = net.forward(tape, to_tensor(set.images, idx), Mode::Infer, unused);
    auto ce = smoothed_cross_entropy(tape, probs, labels, cfg.label_smoothing);
    loss_sum += static_cast<double>(ce.value()[0]) * static_cast<double>(idx.size());
    hits += count_correct(probs.value(), labels);
  }
  const double n = static_cast<double>(set.size());
  return {loss_sum / n + l2_value(net.parameters(), cfg.l2), static_cast<double>(hits) / n};
}

std::vector<double> predict_scores(Network<float>& net, const ImageSet& set, std::size_t batch) {
  std::vector<double> scores;
  scores.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += batch) {
    std::vector<std::size_t> idx(std::min(batch, set.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto probs = net.predict(to_tensor(set.images, idx));
    for (std::size_t i = 0; i < idx.size(); ++i) scores.push_back(static_cast<double>(probs[i * 2]));
  }
  return scores;
}

TrainResult train_loop(Network<float>& net, const ImageSet& train, const ImageSet& val, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  check_set(train, "training");
  check_set(val, "validation");

  TrainResult res;
  // float32 keeps ~7 digits, so steps this small vanish against O(1e-1) weights
  if (cfg.learning_rate > 0.0 && cfg.learning_rate < 1e-8) {
    res.warnings.push_back(fmt::format(
        "learning rate {} is below float32 resolution for typical weights; little or no movement expected",
        cfg.learning_rate));
  }

  BatchNormOptions bn = net.batchnorm_options();
  bn.momentum = cfg.bn_momentum;
  net.set_batchnorm_options(bn);

  const Rng root(cfg.seed);
  Rng shuffle_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);
  Rng augment_rng = root.fork(3);

  Adam<float> adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  PlateauScheduler plateau(cfg.plateau_factor, cfg.plateau_patience, cfg.min_lr, cfg.plateau_min_delta);
  EarlyStopping stopper(cfg.early_stop_patience);
  std::vector<NamedTensor<float>> best_state = net.state();
  double best_loss = INFINITY;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = cfg.learning_rate;
  const auto run_start = clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = clock::now();
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto labels = batch_labels(train, idx);

      Tensor<float> x;
      if (cfg.augment) {
        std::vector<img::ImageU8> aug;
        aug.reserve(idx.size());
        for (std::size_t i : idx) aug.push_back(img::augment(train.images[i], augment_rng, Split::Train, cfg.augment_policy));
        std::vector<std::size_t> local(aug.size());
        std::iota(local.begin(), local.end(), std::size_t{0});
        x = to_tensor(aug, local);
      } else {
        x = to_tensor(train.images, idx);
      }

      Tape<float> tape;
      auto probs = net.forward(tape, x, Mode::Train, dropout_rng);
      auto loss = smoothed_cross_entropy(tape, probs, labels, cfg.label_smoothing);
      if (cfg.l2 > 0.0) loss = ops::add(tape, loss, l2_penalty(tape, net.parameters(), cfg.l2));
      const double lv = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(lv)) {
        throw NonFiniteError(fmt::format("non-finite loss at epoch {}, batch starting at {}", epoch, start));
      }
      net.zero_grad();
      tape.backward(loss);
      adam.step(net.parameters(), lr);

      loss_sum += lv * static_cast<double>(idx.size());
      hits += count_correct(probs.value(), labels);
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train.size());
    row.train_acc = static_cast<double>(hits) / static_cast<double>(train.size());
    const auto ev = evaluate(net, val, cfg);
    row.val_loss = ev.loss;
    row.val_acc = ev.accuracy;
    row.lr = lr;
    row.wall_seconds = std::chrono::duration<double>(clock::now() - epoch_start).count();
    res.log.push_back(row);
    if (on_epoch) on_epoch(row);

    if (ev.loss < best_loss) {
      best_loss = ev.loss;
      best_state = net.state();
      res.best_epoch = epoch;
      res.best_val_loss = ev.loss;
      res.best_val_acc = ev.accuracy;
    }
    const bool stop = stopper.update(ev.loss);
    lr = plateau.update(ev.loss, lr);
    if (stop) {
      res.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  net.load_state(best_state);
  if (res.best_epoch > 0) res.log[res.best_epoch - 1].best = true;
  res.seconds = std::chrono::duration<double>(clock::now() - run_start).count();
  return res;
}

void write_epoch_csv(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,train_loss,train_acc,val_loss,val_acc,lr,best\n";
  for (const auto& r : log) {
    fmt::print(os, "{},{:.8f},{:.6f},{:.8f},{:.6f},{:.3e},{}\n", r.epoch, r.train_loss, r.train_acc, r.val_loss,
               r.val_acc, r.lr, r.best ? 1 : 0);
  }
}

void write_timing_csv(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,seconds\n";
  for (const auto& r : log) fmt::print(os, "{},{:.3f}\n", r.epoch, r.wall_seconds);
}

}  // namespace padkit::train
