#pragma once

// Adam and NAdam with bias correction, plus parameter initialization and
// gradient clipping. Moment buffers and step counts are per parameter and
// allocated on first use, so parameters may join training late.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mann/nn/tensor.hpp"
#include "mann/rng.hpp"

namespace mann::nn {

template <typename T>
Tensor<T> init_uniform(Rng& rng, std::vector<int> shape, int fan_in) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::size_t total = Tensor<T>::count(shape);
  std::vector<T> values(total);
  for (std::size_t i = 0; i < total; ++i)
    values[i] = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::leaf(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> init_zeros(std::vector<int> shape) {
  std::size_t total = Tensor<T>::count(shape);
  return Tensor<T>::leaf(std::move(shape), std::vector<T>(total, T{0}));
}

enum class OptimizerKind { kAdam, kNadam };

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, T lr) : kind_(kind), lr_(lr) {}

  // One update over the given parameters; skips non-trainable ones and
  // zeroes every gradient it consumed.
  void step(const std::vector<Parameter<T>*>& params) {
    for (Parameter<T>* p : params) {
      if (!p->trainable) continue;
      auto& grad = p->value.grad();
      auto& val = p->value.values();
      if (grad.size() != val.size())
        throw std::runtime_error("optimizer: parameter " + p->name + " has no gradient");
      Slot& slot = slots_[p->name];
      if (slot.m.empty()) {
        slot.m.assign(val.size(), T{0});
        slot.v.assign(val.size(), T{0});
      }
      ++slot.t;
      T b1t = static_cast<T>(std::pow(static_cast<double>(beta1_), static_cast<double>(slot.t)));
      T b2t = static_cast<T>(std::pow(static_cast<double>(beta2_), static_cast<double>(slot.t)));
      for (std::size_t i = 0; i < val.size(); ++i) {
        T g = grad[i];
        slot.m[i] = beta1_ * slot.m[i] + (T{1} - beta1_) * g;
        slot.v[i] = beta2_ * slot.v[i] + (T{1} - beta2_) * g * g;
        T v_hat = slot.v[i] / (T{1} - b2t);
        T update;
        if (kind_ == OptimizerKind::kAdam) {
          T m_hat = slot.m[i] / (T{1} - b1t);
          update = m_hat;
        } else {
          // Nesterov momentum: look one step ahead with the fresh gradient
          T b1t_next = b1t * beta1_;
          update = beta1_ * slot.m[i] / (T{1} - b1t_next) + (T{1} - beta1_) * g / (T{1} - b1t);
        }
        val[i] -= lr_ * update / (std::sqrt(v_hat) + eps_);
        grad[i] = T{0};
      }
    }
  }

  T lr() const { return lr_; }
  OptimizerKind kind() const { return kind_; }

 private:
  struct Slot {
    std::vector<T> m, v;
    std::int64_t t = 0;
  };
  OptimizerKind kind_;
  T lr_;
  T beta1_ = static_cast<T>(0.9);
  T beta2_ = static_cast<T>(0.999);
  T eps_ = static_cast<T>(1e-8);
  std::unordered_map<std::string, Slot> slots_;
};

template <typename T>
void zero_grads(const std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) p->value.zero_grad();
}

// Scales all gradients down to a global L2 norm of max_norm when they exceed
// it. Returns the pre-clip norm.
template <typename T>
T clip_global_norm(const std::vector<Parameter<T>*>& params, T max_norm) {
  T sum{0};
  for (Parameter<T>* p : params)
    for (T g : p->value.grad()) sum += g * g;
  T norm = std::sqrt(sum);
  if (norm > max_norm && norm > T{0}) {
    T factor = max_norm / norm;
    for (Parameter<T>* p : params)
      for (T& g : p->value.grad()) g *= factor;
  }
  return norm;
}

}  // namespace mann::nn
