#pragma once

// Analogy regressor: two separately parameterized arms combine (A, B) and
// (A, C), and a final linear layer maps their concatenation to the predicted
// embedding of D. No activation on the output.

#include <vector>

#include "mann/nn/optim.hpp"
#include "mann/nn/tensor.hpp"

namespace mann {

struct AnnrConfig {
  int embed_dim = 80;
  int hidden = 80;  // defaults to the embedding width
};

template <typename T>
struct Annr {
  AnnrConfig cfg;
  nn::Parameter<T> w_ab, b_ab;  // [2n, hidden], [hidden]
  nn::Parameter<T> w_ac, b_ac;  // [2n, hidden], [hidden]
  nn::Parameter<T> w_out, b_out;  // [2*hidden, n], [n]

  static Annr init(const AnnrConfig& cfg, Rng& rng) {
    Annr m;
    m.cfg = cfg;
    int n2 = cfg.embed_dim * 2;
    m.w_ab = {"annr.w_ab", nn::init_uniform<T>(rng, {n2, cfg.hidden}, n2)};
    m.b_ab = {"annr.b_ab", nn::init_zeros<T>({cfg.hidden})};
    m.w_ac = {"annr.w_ac", nn::init_uniform<T>(rng, {n2, cfg.hidden}, n2)};
    m.b_ac = {"annr.b_ac", nn::init_zeros<T>({cfg.hidden})};
    m.w_out = {"annr.w_out", nn::init_uniform<T>(rng, {cfg.hidden * 2, cfg.embed_dim}, cfg.hidden * 2)};
    m.b_out = {"annr.b_out", nn::init_zeros<T>({cfg.embed_dim})};
    return m;
  }

  std::vector<nn::Parameter<T>*> params() {
    return {&w_ab, &b_ab, &w_ac, &b_ac, &w_out, &b_out};
  }

  nn::Tensor<T> predict(const nn::Tensor<T>& ea, const nn::Tensor<T>& eb,
                        const nn::Tensor<T>& ec) {
    nn::Tensor<T> u = nn::relu(nn::affine(nn::concat(ea, eb), w_ab.value, b_ab.value));
    nn::Tensor<T> v = nn::relu(nn::affine(nn::concat(ea, ec), w_ac.value, b_ac.value));
    return nn::affine(nn::concat(u, v), w_out.value, b_out.value);
  }
};

}  // namespace mann
