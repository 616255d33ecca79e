#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "padkit/trainer.hpp"

namespace padkit::train {

namespace {
constexpr double kLogFloor = 1e-12;
}

template <typename T>
Var<T> smoothed_cross_entropy(Tape<T>& tape, const Var<T>& probs, const std::vector<int>& labels, double alpha) {
  const Shape& s = probs.shape();
  if (s.size() != 2) throw ShapeError("smoothed_cross_entropy: probs must be [N,K], got " + shape_to_string(s));
  const std::size_t n = s[0], k = s[1];
  if (n == 0 || k < 2) throw ShapeError("smoothed_cross_entropy: need N >= 1 and K >= 2");
  if (labels.size() != n) {
    throw ShapeError(fmt::format("smoothed_cross_entropy: {} labels for {} rows", labels.size(), n));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw std::invalid_argument("smoothed_cross_entropy: label out of range");
  }
  const double off = alpha / static_cast<double>(k);
  const double on = 1.0 - alpha + off;
  const auto& p = probs.value();

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const double t = static_cast<std::size_t>(labels[i]) == c ? on : off;
      total -= t * std::log(std::max(static_cast<double>(p[i * k + c]), kLogFloor));
    }
  }
  const T loss = static_cast<T>(total / static_cast<double>(n));

  return tape.record(Tensor<T>(Shape{1}, std::vector<T>{loss}), {probs}, [labels, on, off, n, k](Node<T>& self) {
    Node<T>& pn = *self.parents[0];
    if (!pn.requires_grad) return;
    Tensor<T>& g = pn.grad_buffer();
    const double up = static_cast<double>(self.grad[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double pv = static_cast<double>(pn.value[i * k + c]);
        if (pv <= kLogFloor) continue;  // clamped region is flat
        const double t = static_cast<std::size_t>(labels[i]) == c ? on : off;
        g[i * k + c] += static_cast<T>(-up * t / pv);
      }
    }
  });
}

template <typename T>
double l2_value(const std::vector<Parameter<T>>& params, double lambda) {
  double ss = 0.0;
  for (const auto& p : params) {
    for (T w : p.var.value().data()) ss += static_cast<double>(w) * static_cast<double>(w);
  }
  return lambda * ss;
}

template <typename T>
Var<T> l2_penalty(Tape<T>& tape, const std::vector<Parameter<T>>& params, double lambda) {
  std::vector<Var<T>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(p.var);
  const T value = static_cast<T>(l2_value(params, lambda));
  return tape.record(Tensor<T>(Shape{1}, std::vector<T>{value}), vars, [lambda](Node<T>& self) {
    const T scale = static_cast<T>(2.0 * lambda * static_cast<double>(self.grad[0]));
    for (auto& parent : self.parents) {
      if (!parent->requires_grad) continue;
      Tensor<T>& g = parent->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * parent->value[i];
    }
  });
}

template <typename T>
void Adam<T>::step(std::vector<Parameter<T>>& params, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.var.shape());
      v_.emplace_back(p.var.shape());
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter list changed between steps");
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (m_[j].shape() != params[j].var.shape()) throw ShapeError("adam: shape of " + params[j].name + " changed");
    if (!params[j].var.has_grad()) continue;
    for (T g : params[j].var.grad().data()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NonFiniteError(fmt::format("non-finite gradient in {} at step {}", params[j].name, t_ + 1));
      }
    }
  }

  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto& w = params[j].var.value();
    const bool has = params[j].var.has_grad();
    auto& m = m_[j];
    auto& v = v_[j];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = has ? static_cast<double>(params[j].var.grad()[i]) : 0.0;
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * g;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double step = lr * (mi / c1) / (std::sqrt(vi / c2) + epsilon_);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - step);
    }
  }
}

PlateauScheduler::PlateauScheduler(double factor, std::size_t patience, double min_lr, double min_delta)
    : factor_(factor), min_lr_(min_lr), min_delta_(min_delta), patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {
  if (!(factor > 0.0 && factor < 1.0) || patience == 0) throw std::invalid_argument("plateau: bad factor or patience");
}

double PlateauScheduler::update(double val_loss, double lr) {
  if (val_loss < best_ - min_delta_) {
    best_ = val_loss;
    wait_ = 0;
    return lr;
  }
  if (++wait_ < patience_) return lr;
  wait_ = 0;
  if (lr <= min_lr_) return lr;  // also leaves a frozen lr of 0 alone
  return std::max(lr * factor_, min_lr_);
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw std::invalid_argument("early stopping: patience must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    wait_ = 0;
    return false;
  }
  return ++wait_ >= patience_;
}

template Var<float> smoothed_cross_entropy(Tape<float>&, const Var<float>&, const std::vector<int>&, double);
template Var<double> smoothed_cross_entropy(Tape<double>&, const Var<double>&, const std::vector<int>&, double);
template Var<float> l2_penalty(Tape<float>&, const std::vector<Parameter<float>>&, double);
template Var<double> l2_penalty(Tape<double>&, const std::vector<Parameter<double>>&, double);
template double l2_value(const std::vector<Parameter<float>>&, double);
template double l2_value(const std::vector<Parameter<double>>&, double);
template class Adam<float>;
template class Adam<double>;

}  // namespace padkit::train
