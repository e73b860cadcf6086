#pragma once

// Vector-arithmetic baselines over any word embedding: the parallelogram
// offset, and the additive and multiplicative cosine objectives.

#include <vector>

#include "mann/solve/ranking.hpp"

namespace mann {

inline constexpr double kCosMulEpsilon = 0.001;

template <typename T>
std::vector<T> parallelogram_target(const std::vector<T>& ea, const std::vector<T>& eb,
                                    const std::vector<T>& ec) {
  std::vector<T> out(ea.size());
  for (std::size_t i = 0; i < ea.size(); ++i) out[i] = eb[i] - ea[i] + ec[i];
  return out;
}

// nearest pool word to e_b - e_a + e_c by cosine distance
template <typename T>
SolverRanking solve_parallelogram(const std::vector<T>& ea, const std::vector<T>& eb,
                                  const std::vector<T>& ec, const EmbeddedPool<T>& pool,
                                  const Deadline& deadline = Deadline::unlimited()) {
  return retrieve_nearest(parallelogram_target(ea, eb, ec), pool, deadline);
}

// argmax over d of cos(e_d, e_b - e_a + e_c)
template <typename T>
SolverRanking solve_3cosadd(const std::vector<T>& ea, const std::vector<T>& eb,
                            const std::vector<T>& ec, const EmbeddedPool<T>& pool,
                            const Deadline& deadline = Deadline::unlimited()) {
  std::vector<T> target = parallelogram_target(ea, eb, ec);
  return rank_by_score(
      pool, [&](std::size_t i) { return -cosine_similarity(pool.embeddings[i], target); },
      deadline);
}

// argmax over d of cos(e_d, e_b) * cos(e_d, e_c) / (cos(e_d, e_a) + eps)
template <typename T>
SolverRanking solve_3cosmul(const std::vector<T>& ea, const std::vector<T>& eb,
                            const std::vector<T>& ec, const EmbeddedPool<T>& pool,
                            const Deadline& deadline = Deadline::unlimited()) {
  return rank_by_score(pool,
                       [&](std::size_t i) {
                         const std::vector<T>& ed = pool.embeddings[i];
                         return -(cosine_similarity(ed, eb) * cosine_similarity(ed, ec) /
                                  (cosine_similarity(ed, ea) + kCosMulEpsilon));
                       },
                       deadline);
}

}  // namespace mann
