#pragma once

// Solving with the trained models: regression followed by nearest-neighbor
// retrieval, classifier-scored retrieval (optionally shortlisted by the
// multiplicative cosine objective first), and sequence generation.

#include <algorithm>
#include <map>
#include <vector>

#include "mann/models/annc.hpp"
#include "mann/models/annr.hpp"
#include "mann/models/autoencoder.hpp"
#include "mann/models/cnn_embedder.hpp"
#include "mann/solve/ranking.hpp"
#include "mann/solve/vector.hpp"

namespace mann {

// regression prediction in embedding space, then cosine retrieval
template <typename T, typename EmbedFn>
SolverRanking solve_annr_retrieval(const AnalogyEquation& eq, Annr<T>& annr, EmbedFn&& embed,
                                   const EmbeddedPool<T>& pool,
                                   const Deadline& deadline = Deadline::unlimited()) {
  nn::NoGradGuard ng;
  nn::Tensor<T> ex = annr.predict(nn::Tensor<T>::from({annr.cfg.embed_dim}, embed(eq.a)),
                                  nn::Tensor<T>::from({annr.cfg.embed_dim}, embed(eq.b)),
                                  nn::Tensor<T>::from({annr.cfg.embed_dim}, embed(eq.c)));
  return retrieve_nearest(ex.values(), pool, deadline);
}

// Scores each candidate d with the classifier on (a, b, c, d), best score
// first; ties break lexicographically. With prefilter_k > 0 only the top
// prefilter_k candidates under 3CosMul are scored and ranked; the rest of
// the pool is left out of the ranking entirely.
template <typename T>
SolverRanking solve_annc_retrieval(const AnalogyEquation& eq, CnnEmbedder<T>& embedder,
                                   Annc<T>& annc, const EmbeddedPool<T>& pool,
                                   int prefilter_k = 0,
                                   const Deadline& deadline = Deadline::unlimited()) {
  nn::NoGradGuard ng;
  std::vector<T> va = embedder.embed_values(eq.a);
  std::vector<T> vb = embedder.embed_values(eq.b);
  std::vector<T> vc = embedder.embed_values(eq.c);

  std::vector<std::size_t> shortlist;
  if (prefilter_k > 0 && static_cast<std::size_t>(prefilter_k) < pool.words.size()) {
    SolverRanking pre = solve_3cosmul(va, vb, vc, pool, deadline);
    if (pre.timed_out) return pre;
    std::map<Word, std::size_t> index;
    for (std::size_t i = 0; i < pool.words.size(); ++i) index.emplace(pool.words[i], i);
    for (int k = 0; k < prefilter_k && k < static_cast<int>(pre.candidates.size()); ++k)
      shortlist.push_back(index.at(pre.candidates[static_cast<std::size_t>(k)]));
  } else {
    shortlist.resize(pool.words.size());
    for (std::size_t i = 0; i < shortlist.size(); ++i) shortlist[i] = i;
  }

  nn::Tensor<T> ta = nn::Tensor<T>::from({annc.cfg.embed_dim}, va);
  nn::Tensor<T> tb = nn::Tensor<T>::from({annc.cfg.embed_dim}, vb);
  nn::Tensor<T> tc = nn::Tensor<T>::from({annc.cfg.embed_dim}, vc);
  SolverRanking out;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(shortlist.size());
  for (std::size_t i : shortlist) {
    if (deadline.expired()) {
      out.timed_out = true;
      break;
    }
    nn::Tensor<T> td = nn::Tensor<T>::from({annc.cfg.embed_dim}, pool.embeddings[i]);
    scored.push_back({-static_cast<double>(annc.score(ta, tb, tc, td).item()), i});
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return pool.words[x.second] < pool.words[y.second];
  });
  for (const auto& [s, i] : scored) out.candidates.push_back(pool.words[i]);
  return out;
}

// regression in autoencoder embedding space, decoded greedily to a word;
// always a single candidate
template <typename T>
SolverRanking solve_ae_generation(const AnalogyEquation& eq, Autoencoder<T>& ae, Annr<T>& annr,
                                  const Deadline& deadline = Deadline::unlimited()) {
  nn::NoGradGuard ng;
  SolverRanking out;
  if (deadline.expired()) {
    out.timed_out = true;
    return out;
  }
  nn::Tensor<T> ex = annr.predict(ae.encode(eq.a), ae.encode(eq.b), ae.encode(eq.c));
  std::size_t longest = std::max({eq.a.size(), eq.b.size(), eq.c.size()});
  auto decoded = ae.decode_greedy(ex, ae.decode_budget(longest));
  out.candidates.push_back(decoded.word);
  return out;
}

}  // namespace mann
