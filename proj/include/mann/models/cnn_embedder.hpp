#pragma once

// Character n-gram word embedder: a learned character table, one full-width
// convolution per window size, and max pooling over positions. The default
// configuration (16 filters for each window 2..6) gives 80 components.

#include <algorithm>
#include <string>
#include <vector>

#include "mann/nn/conv.hpp"
#include "mann/nn/optim.hpp"
#include "mann/nn/tensor.hpp"
#include "mann/unicode.hpp"
#include "mann/vocab.hpp"

namespace mann {

struct CnnEmbedderConfig {
  int char_dim = 64;
  std::vector<int> windows = {2, 3, 4, 5, 6};
  int filters_per_window = 16;
  int min_length = 6;  // words are padded up to the widest window

  int output_dim() const { return static_cast<int>(windows.size()) * filters_per_window; }
};

template <typename T>
struct CnnEmbedder {
  CnnEmbedderConfig cfg;
  Vocabulary vocab;
  nn::Parameter<T> char_table;             // [vocab, char_dim]
  std::vector<nn::Parameter<T>> filters;   // one [window*char_dim, filters_per_window] each

  static CnnEmbedder init(const CnnEmbedderConfig& cfg, const Vocabulary& vocab, Rng& rng) {
    CnnEmbedder e;
    e.cfg = cfg;
    e.vocab = vocab;
    e.char_table = {"embedder.char_table",
                    nn::init_uniform<T>(rng, {vocab.size(), cfg.char_dim}, cfg.char_dim)};
    for (int w : cfg.windows)
      e.filters.push_back({"embedder.conv_w" + std::to_string(w),
                           nn::init_uniform<T>(rng, {w * cfg.char_dim, cfg.filters_per_window},
                                               w * cfg.char_dim)});
    return e;
  }

  std::vector<nn::Parameter<T>*> params() {
    std::vector<nn::Parameter<T>*> out{&char_table};
    for (auto& f : filters) out.push_back(&f);
    return out;
  }

  nn::Tensor<T> embed(const Word& word) const {
    std::vector<int> ids = vocab.encode(word);
    int widest = *std::max_element(cfg.windows.begin(), cfg.windows.end());
    std::size_t min_len = static_cast<std::size_t>(std::max(cfg.min_length, widest));
    while (ids.size() < min_len) ids.push_back(Vocabulary::kPad);
    nn::Tensor<T> chars = nn::gather_rows(char_table.value, ids);
    std::vector<nn::Tensor<T>> pooled;
    pooled.reserve(cfg.windows.size());
    for (std::size_t k = 0; k < cfg.windows.size(); ++k)
      pooled.push_back(
          nn::max_over_time(nn::conv_over_chars(chars, filters[k].value, cfg.windows[k])));
    return nn::concat(pooled);
  }

  // plain values, no graph
  std::vector<T> embed_values(const Word& word) const {
    nn::NoGradGuard ng;
    return embed(word).values();
  }
};

}  // namespace mann
