#pragma once

// Sequence autoencoder. The encoder is a single-layer BiLSTM over one-hot
// characters; the word embedding is the concatenation (h_fwd, h_bwd, c_fwd,
// c_bwd), 4h wide. The decoder LSTM (hidden 2h) starts from h = (h_fwd,
// h_bwd) and c = (c_fwd, c_bwd), is primed with the begin symbol, and emits
// one distribution per character through the end symbol.

#include <algorithm>
#include <vector>

#include "mann/nn/lstm.hpp"
#include "mann/nn/optim.hpp"
#include "mann/nn/tensor.hpp"
#include "mann/unicode.hpp"
#include "mann/vocab.hpp"

namespace mann {

struct AutoencoderConfig {
  int hidden = 64;       // h; the embedding is 4h wide
  int max_decode = 30;   // floor on the greedy decode length budget
  int decode_slack = 5;  // extra steps over the longest input word

  int embed_dim() const { return hidden * 4; }
};

template <typename T>
struct Autoencoder {
  AutoencoderConfig cfg;
  Vocabulary vocab;
  nn::LstmParams<T> enc_fwd, enc_bwd;   // input one-hot vocab, hidden h
  nn::LstmParams<T> dec;                // input one-hot vocab, hidden 2h
  nn::Parameter<T> out_w, out_b;        // [2h, vocab], [vocab]

  static Autoencoder init(const AutoencoderConfig& cfg, const Vocabulary& vocab, Rng& rng) {
    Autoencoder m;
    m.cfg = cfg;
    m.vocab = vocab;
    int v = vocab.size(), h = cfg.hidden;
    auto lstm = [&](const char* name, int in, int hidden) {
      nn::LstmParams<T> p;
      p.w_ih = {std::string("ae.") + name + ".w_ih", nn::init_uniform<T>(rng, {in, 4 * hidden}, in)};
      p.w_hh = {std::string("ae.") + name + ".w_hh",
                nn::init_uniform<T>(rng, {hidden, 4 * hidden}, hidden)};
      p.bias = {std::string("ae.") + name + ".bias", nn::init_zeros<T>({4 * hidden})};
      // forget gate starts open
      auto& bv = p.bias.value.values();
      for (int i = hidden; i < 2 * hidden; ++i) bv[static_cast<std::size_t>(i)] = T{1};
      return p;
    };
    m.enc_fwd = lstm("enc_fwd", v, h);
    m.enc_bwd = lstm("enc_bwd", v, h);
    m.dec = lstm("dec", v, 2 * h);
    m.out_w = {"ae.out_w", nn::init_uniform<T>(rng, {2 * h, v}, 2 * h)};
    m.out_b = {"ae.out_b", nn::init_zeros<T>({v})};
    return m;
  }

  std::vector<nn::Parameter<T>*> params() {
    std::vector<nn::Parameter<T>*> out;
    for (auto* p : enc_fwd.params()) out.push_back(p);
    for (auto* p : enc_bwd.params()) out.push_back(p);
    for (auto* p : dec.params()) out.push_back(p);
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
  }

  // [4h] embedding of a word
  nn::Tensor<T> encode(const Word& word) {
    std::vector<int> ids = vocab.encode(word);
    auto enc = nn::bilstm_encode(ids, enc_fwd, enc_bwd);
    return nn::concat<T>({enc.h_fwd, enc.h_bwd, enc.c_fwd, enc.c_bwd});
  }

  std::vector<T> encode_values(const Word& word) {
    nn::NoGradGuard ng;
    return encode(word).values();
  }

  // Teacher forcing: feed begin symbol plus the gold characters, return the
  // |gold|+1 output distributions (the last position is for the end symbol).
  nn::Tensor<T> decode_teacher(const nn::Tensor<T>& embedding, const Word& gold) {
    int h2 = cfg.hidden * 2;
    nn::LstmState<T> state{nn::slice(embedding, 0, h2), nn::slice(embedding, h2, h2)};
    std::vector<int> inputs{Vocabulary::kBow};
    for (int id : vocab.encode(gold)) inputs.push_back(id);
    std::vector<nn::Tensor<T>> dists;
    dists.reserve(inputs.size());
    for (int id : inputs) {
      state = nn::lstm_cell_onehot(id, state, dec);
      dists.push_back(nn::softmax(nn::affine(state.h, out_w.value, out_b.value)));
    }
    return nn::stack_rows(dists);
  }

  // target indices matching decode_teacher's rows
  std::vector<int> teacher_targets(const Word& gold) const {
    std::vector<int> t = vocab.encode(gold);
    t.push_back(Vocabulary::kEow);
    return t;
  }

  struct Decoded {
    Word word;
    bool truncated = false;  // hit the step budget before the end symbol
  };

  int decode_budget(std::size_t longest_input) const {
    return std::max(cfg.max_decode, static_cast<int>(longest_input) + cfg.decode_slack);
  }

  // Greedy decoding: feed back the argmax until the end symbol or the step
  // budget. Reserved symbols other than the end symbol add no character.
  Decoded decode_greedy(const nn::Tensor<T>& embedding, int budget) {
    nn::NoGradGuard ng;
    int h2 = cfg.hidden * 2;
    nn::LstmState<T> state{nn::slice(embedding, 0, h2), nn::slice(embedding, h2, h2)};
    Decoded out;
    int input = Vocabulary::kBow;
    for (int step = 0; step < budget; ++step) {
      state = nn::lstm_cell_onehot(input, state, dec);
      nn::Tensor<T> dist = nn::softmax(nn::affine(state.h, out_w.value, out_b.value));
      int best = 0;
      const auto& dv = dist.values();
      for (int i = 1; i < vocab.size(); ++i)
        if (dv[static_cast<std::size_t>(i)] > dv[static_cast<std::size_t>(best)]) best = i;
      if (best == Vocabulary::kEow) return out;
      if (best >= Vocabulary::kReserved) out.word.push_back(vocab.decode(best));
      input = best;
    }
    out.truncated = true;
    return out;
  }

  Decoded round_trip(const Word& word) {
    nn::NoGradGuard ng;
    return decode_greedy(encode(word), decode_budget(word.size()));
  }
};

}  // namespace mann
