#pragma once

// Analogy classifier over embedded quadruples. Stage one compares the two
// ratios component-wise with 1x2 filters, stage two slides 2x2 filters along
// the embedding axis across all stage-one channels, and a dense layer with a
// sigmoid turns the flattened result into a validity score.

#include <string>
#include <vector>

#include "mann/nn/conv.hpp"
#include "mann/nn/optim.hpp"
#include "mann/nn/tensor.hpp"

namespace mann {

struct AnncConfig {
  int embed_dim = 80;
  int stage1_filters = 128;
  int stage2_filters = 64;

  int dense_in() const { return stage2_filters * (embed_dim - 1); }
};

template <typename T>
struct Annc {
  AnncConfig cfg;
  nn::Parameter<T> w1, b1;  // [stage1, 2], [stage1]
  nn::Parameter<T> w2, b2;  // [stage2, stage1*4], [stage2]
  nn::Parameter<T> wd, bd;  // [stage2*(n-1), 1], [1]

  static Annc init(const AnncConfig& cfg, Rng& rng) {
    Annc m;
    m.cfg = cfg;
    m.w1 = {"annc.w1", nn::init_uniform<T>(rng, {cfg.stage1_filters, 2}, 2)};
    m.b1 = {"annc.b1", nn::init_zeros<T>({cfg.stage1_filters})};
    m.w2 = {"annc.w2", nn::init_uniform<T>(rng, {cfg.stage2_filters, cfg.stage1_filters * 4},
                                           cfg.stage1_filters * 4)};
    m.b2 = {"annc.b2", nn::init_zeros<T>({cfg.stage2_filters})};
    m.wd = {"annc.wd", nn::init_uniform<T>(rng, {cfg.dense_in(), 1}, cfg.dense_in())};
    m.bd = {"annc.bd", nn::init_zeros<T>({1})};
    return m;
  }

  std::vector<nn::Parameter<T>*> params() { return {&w1, &b1, &w2, &b2, &wd, &bd}; }

  // scalar validity score in (0, 1)
  nn::Tensor<T> score(const nn::Tensor<T>& ea, const nn::Tensor<T>& eb, const nn::Tensor<T>& ec,
                      const nn::Tensor<T>& ed) {
    nn::Tensor<T> s1 = nn::relu(nn::pair_conv(ea, eb, ec, ed, w1.value, b1.value));
    nn::Tensor<T> s2 = nn::relu(nn::window_conv(s1, w2.value, b2.value));
    return nn::sigmoid(nn::affine(nn::flatten(s2), wd.value, bd.value));
  }
};

}  // namespace mann
