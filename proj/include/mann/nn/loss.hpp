#pragma once

// Training losses. Probabilities are clamped at 1e-7 inside logs; the clamp
// is part of the function, so its gradient is zero in the clamped region.

#include <cmath>

#include "mann/nn/tensor.hpp"

namespace mann::nn {

template <typename T>
constexpr T kLogClamp = static_cast<T>(1e-7);

// mean binary cross-entropy of predictions in (0,1) against 0/1 targets
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const std::vector<T>& targets) {
  detail::require(pred.numel() == targets.size(), "bce_loss: size mismatch");
  std::size_t k = targets.size();
  T inv = T{1} / static_cast<T>(k);
  T sum{0};
  for (std::size_t i = 0; i < k; ++i) {
    T p = pred.values()[i], y = targets[i];
    sum -= y * std::log(std::max(p, kLogClamp<T>)) +
           (T{1} - y) * std::log(std::max(T{1} - p, kLogClamp<T>));
  }
  return detail::make_op<T>(
      {1}, {sum * inv}, {pred},
      [targets, inv](typename Tensor<T>::Node& self) {
        if (auto* g = detail::grad_of<T>(self, 0)) {
          const auto& pv = self.parents[0]->val;
          T go = self.grad[0] * inv;
          for (std::size_t i = 0; i < targets.size(); ++i) {
            T p = pv[i], y = targets[i];
            if (p > kLogClamp<T>) (*g)[i] -= go * y / p;
            if (T{1} - p > kLogClamp<T>) (*g)[i] += go * (T{1} - y) / (T{1} - p);
          }
        }
      });
}

// mean negative log-likelihood of target indices under per-position
// distributions [positions, classes]; positions include the end symbol
template <typename T>
Tensor<T> ce_loss(const Tensor<T>& dists, const std::vector<int>& targets) {
  detail::require(dists.rank() == 2, "ce_loss: distributions must be rank 2");
  detail::require(static_cast<std::size_t>(dists.dim(0)) == targets.size(),
                  "ce_loss: position count mismatch");
  int classes = dists.dim(1);
  for (int t : targets) detail::require(t >= 0 && t < classes, "ce_loss: target out of range");
  T inv = T{1} / static_cast<T>(targets.size());
  T sum{0};
  for (std::size_t i = 0; i < targets.size(); ++i)
    sum -= std::log(std::max(dists.values()[i * classes + static_cast<std::size_t>(targets[i])],
                             kLogClamp<T>));
  return detail::make_op<T>(
      {1}, {sum * inv}, {dists},
      [targets, classes, inv](typename Tensor<T>::Node& self) {
        if (auto* g = detail::grad_of<T>(self, 0)) {
          const auto& dv = self.parents[0]->val;
          T go = self.grad[0] * inv;
          for (std::size_t i = 0; i < targets.size(); ++i) {
            std::size_t at = i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(targets[i]);
            if (dv[at] > kLogClamp<T>) (*g)[at] -= go / dv[at];
          }
        }
      });
}

// mean squared error over all elements
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "mse_loss: shape mismatch");
  T inv = T{1} / static_cast<T>(a.numel());
  T sum{0};
  for (std::size_t i = 0; i < a.numel(); ++i) {
    T d = a.values()[i] - b.values()[i];
    sum += d * d;
  }
  return detail::make_op<T>({1}, {sum * inv}, {a, b},
                            [inv](typename Tensor<T>::Node& self) {
                              const auto& av = self.parents[0]->val;
                              const auto& bv = self.parents[1]->val;
                              T go = self.grad[0] * inv * T{2};
                              auto* ga = detail::grad_of<T>(self, 0);
                              auto* gb = detail::grad_of<T>(self, 1);
                              for (std::size_t i = 0; i < av.size(); ++i) {
                                T d = go * (av[i] - bv[i]);
                                if (ga) (*ga)[i] += d;
                                if (gb) (*gb)[i] -= d;
                              }
                            });
}

// Regression loss that rewards being closer to the true target than to a
// shuffled one: mean over rows of (1 + mse(target_i, pred_i)) /
// (1 + mse(target_perm(i), pred_i)). Needs at least 2 rows to shuffle.
template <typename T>
Tensor<T> annr_loss(const Tensor<T>& target, const Tensor<T>& pred,
                    const std::vector<std::size_t>& perm) {
  detail::require(target.rank() == 2 && pred.rank() == 2 && target.shape() == pred.shape(),
                  "annr_loss: [batch, n] tensors required");
  std::size_t batch = static_cast<std::size_t>(target.dim(0));
  detail::require(batch >= 2, "annr_loss: batch must be at least 2");
  detail::require(perm.size() == batch, "annr_loss: permutation size mismatch");
  for (std::size_t p : perm) detail::require(p < batch, "annr_loss: permutation out of range");
  std::size_t n = static_cast<std::size_t>(target.dim(1));

  const T* tv = target.values().data();
  const T* pv = pred.values().data();
  T inv_n = T{1} / static_cast<T>(n);
  std::vector<T> num(batch), den(batch);
  T loss{0};
  for (std::size_t i = 0; i < batch; ++i) {
    T s{0};
    for (std::size_t j = 0; j < n; ++j) {
      T d = tv[i * n + j] - pv[i * n + j];
      s += d * d;
    }
    num[i] = s * inv_n;
    s = T{0};
    for (std::size_t j = 0; j < n; ++j) {
      T d = tv[perm[i] * n + j] - pv[i * n + j];
      s += d * d;
    }
    den[i] = s * inv_n;
    loss += (T{1} + num[i]) / (T{1} + den[i]);
  }
  loss /= static_cast<T>(batch);

  return detail::make_op<T>(
      {1}, {loss}, {target, pred},
      [perm, num, den, n, batch, inv_n](typename Tensor<T>::Node& self) {
        const auto& tv = self.parents[0]->val;
        const auto& pv = self.parents[1]->val;
        auto* gt = detail::grad_of<T>(self, 0);
        auto* gp = detail::grad_of<T>(self, 1);
        T go = self.grad[0] / static_cast<T>(batch);
        for (std::size_t i = 0; i < batch; ++i) {
          T dnum = go / (T{1} + den[i]);                                  // dL/dnum_i
          T dden = -go * (T{1} + num[i]) / ((T{1} + den[i]) * (T{1} + den[i]));  // dL/dden_i
          for (std::size_t j = 0; j < n; ++j) {
            T d1 = T{2} * inv_n * (tv[i * n + j] - pv[i * n + j]);
            T d2 = T{2} * inv_n * (tv[perm[i] * n + j] - pv[i * n + j]);
            if (gt) {
              (*gt)[i * n + j] += dnum * d1;
              (*gt)[perm[i] * n + j] += dden * d2;
            }
            if (gp) (*gp)[i * n + j] += -dnum * d1 - dden * d2;
          }
        }
      });
}

}  // namespace mann::nn
