#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include <fmt/format.h>

#include "padkit/trainer.hpp"

namespace padkit::train {

std::string dataset_flag(Dataset d) {
  switch (d) {
    case Dataset::Custom: return "custom";
    case Dataset::ReplayAttack: return "replay-attack";
    case Dataset::Csmad: return "csmad";
    case Dataset::Mad3d: return "3dmad";
    case Dataset::MsSpoof: return "msspoof";
    case Dataset::Combined: return "combined";
  }
  return "?";
}

Dataset parse_dataset(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  std::erase(s, '_');
  if (s == "replayattack") s = "replay-attack";
  for (Dataset d : kAllDatasets) {
    if (dataset_flag(d) == s) return d;
  }
  throw std::invalid_argument("unknown dataset '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(learning_rate) || learning_rate < 0.0) bad("learning rate must be finite and >= 0");
  if (!finite(min_lr) || min_lr <= 0.0) bad("min lr must be > 0");
  if (learning_rate > 0.0 && min_lr > learning_rate) bad("min lr exceeds the learning rate");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0,1)");
  if (!finite(l2) || l2 < 0.0) bad("l2 must be >= 0");
  if (batch_size == 0) bad("batch size must be >= 1");
  if (max_epochs == 0) bad("max epochs must be >= 1");
  if (early_stop_patience == 0) bad("early-stop patience must be >= 1");
  if (plateau_patience == 0) bad("plateau patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) bad("plateau factor must be in (0,1)");
  if (!finite(plateau_min_delta) || plateau_min_delta < 0.0) bad("plateau min delta must be >= 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) bad("label smoothing must be in [0,1)");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) bad("batch-norm momentum must be in [0,1)");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) bad("adam betas in (0,1)");
  if (!(adam_epsilon > 0.0)) bad("adam epsilon must be > 0");
}

std::string TrainConfig::to_text() const {
  std::string s;
  auto line = [&](const char* key, auto v) { s += fmt::format("{} {}\n", key, v); };
  line("learning_rate", learning_rate);
  line("dropout", dropout);
  line("l2", l2);
  line("batch_size", batch_size);
  line("max_epochs", max_epochs);
  line("early_stop_patience", early_stop_patience);
  line("plateau_factor", plateau_factor);
  line("plateau_patience", plateau_patience);
  line("plateau_min_delta", plateau_min_delta);
  line("min_lr", min_lr);
  line("label_smoothing", label_smoothing);
  line("bn_momentum", bn_momentum);
  line("adam_beta1", adam_beta1);
  line("adam_beta2", adam_beta2);
  line("adam_epsilon", adam_epsilon);
  line("augment", augment ? 1 : 0);
  line("seed", seed);
  return s;
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  const std::string v(value);
  auto fail = [&] { throw std::invalid_argument(fmt::format("bad value '{}' for {}", v, key)); };
  auto real = [&](double& out) {
    std::size_t used = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used != v.size()) fail();
  };
  auto count = [&](auto& out) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) fail();
    try {
      out = static_cast<std::remove_reference_t<decltype(out)>>(std::stoull(v));
    } catch (const std::exception&) {
      fail();
    }
  };
  if (key == "learning_rate") real(learning_rate);
  else if (key == "dropout") real(dropout);
  else if (key == "l2") real(l2);
  else if (key == "batch_size") count(batch_size);
  else if (key == "max_epochs") count(max_epochs);
  else if (key == "early_stop_patience") count(early_stop_patience);
  else if (key == "plateau_factor") real(plateau_factor);
  else if (key == "plateau_patience") count(plateau_patience);
  else if (key == "plateau_min_delta") real(plateau_min_delta);
  else if (key == "min_lr") real(min_lr);
  else if (key == "label_smoothing") real(label_smoothing);
  else if (key == "bn_momentum") real(bn_momentum);
  else if (key == "adam_beta1") real(adam_beta1);
  else if (key == "adam_beta2") real(adam_beta2);
  else if (key == "adam_epsilon") real(adam_epsilon);
  else if (key == "augment") {
    if (v == "1" || v == "true") augment = true;
    else if (v == "0" || v == "false") augment = false;
    else fail();
  } else if (key == "seed") count(seed);
  else throw std::invalid_argument(fmt::format("unknown train config key '{}'", key));
}

TrainConfig preset(models::Architecture arch, Dataset dataset) {
  using models::Architecture;
  struct Cell {
    double lr, dr;
  };
  // rows: LivenessNet, V1, V2.1, V2.2
  // cols: custom, replay-attack, csmad, 3dmad, msspoof
  static constexpr Cell single[4][5] = {
      {{1e-6, 0.2}, {1e-7, 0.2}, {7e-8, 0.5}, {5e-8, 0.5}, {1e-6, 0.15}},
      {{3e-7, 0.3}, {2e-8, 0.2}, {5e-9, 0.3}, {5e-9, 0.3}, {3e-7, 0.5}},
      {{3e-7, 0.2}, {3e-8, 0.2}, {7e-9, 0.1}, {8e-9, 0.2}, {4e-7, 0.4}},
      {{2e-7, 0.2}, {4e-8, 0.2}, {8e-9, 0.2}, {6e-9, 0.1}, {2e-8, 0.4}},
  };
  static constexpr Cell combined[4] = {{1e-7, 0.01}, {1e-5, 0.05}, {1e-6, 0.05}, {1e-6, 0.05}};

  const auto row = static_cast<std::size_t>(arch);
  TrainConfig cfg;
  if (dataset == Dataset::Combined) {
    cfg.learning_rate = combined[row].lr;
    cfg.dropout = combined[row].dr;
    cfg.batch_size = 16;
  } else {
    const auto& c = single[row][static_cast<std::size_t>(dataset)];
    cfg.learning_rate = c.lr;
    cfg.dropout = c.dr;
    cfg.batch_size = 8;
  }
  return cfg;
}

}  // namespace padkit::train
