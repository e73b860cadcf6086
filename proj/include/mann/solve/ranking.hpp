#pragma once

// Common solver surface: an equation a : b :: c : x, a ranked candidate
// list, and a cooperative deadline. Solvers poll the deadline between units
// of work and return whatever ranking they have when it expires.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mann/unicode.hpp"

namespace mann {

struct AnalogyEquation {
  Word a, b, c;
};

struct SolverRanking {
  std::vector<Word> candidates;  // best first
  bool timed_out = false;
  double elapsed_ms = 0.0;
};

class Deadline {
 public:
  static Deadline unlimited() { return Deadline{}; }

  static Deadline after(double seconds) {
    Deadline d;
    d.unlimited_ = false;
    d.end_ = std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(seconds));
    return d;
  }

  bool expired() const {
    return !unlimited_ && std::chrono::steady_clock::now() >= end_;
  }

 private:
  bool unlimited_ = true;
  std::chrono::steady_clock::time_point end_;
};

using SolveFn = std::function<SolverRanking(const AnalogyEquation&, const Deadline&)>;

// Runs the solver under a deadline and stamps the elapsed time. A limit of 0
// expires immediately; a solver that overran the limit is marked timed out
// even if it returned a complete ranking.
inline SolverRanking solve_with_timeout(const SolveFn& solver, const AnalogyEquation& eq,
                                        double limit_seconds) {
  Deadline deadline = Deadline::after(limit_seconds);
  auto start = std::chrono::steady_clock::now();
  SolverRanking ranking = solver(eq, deadline);
  auto end = std::chrono::steady_clock::now();
  ranking.elapsed_ms = std::chrono::duration<double, std::milli>(end - start).count();
  if (deadline.expired()) ranking.timed_out = true;
  return ranking;
}

template <typename T>
double cosine_similarity(const std::vector<T>& a, const std::vector<T>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;  // zero-norm vectors sit at distance 1
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

template <typename T>
double cosine_distance(const std::vector<T>& a, const std::vector<T>& b) {
  return 1.0 - cosine_similarity(a, b);
}

// retrieval candidates with precomputed embeddings, in word order
template <typename T>
struct EmbeddedPool {
  std::vector<Word> words;
  std::vector<std::vector<T>> embeddings;

  template <typename EmbedFn>
  static EmbeddedPool build(const std::vector<Word>& words, EmbedFn&& embed) {
    EmbeddedPool pool;
    pool.words = words;
    pool.embeddings.reserve(words.size());
    for (const Word& w : words) pool.embeddings.push_back(embed(w));
    return pool;
  }
};

// Sorts pool words by ascending score; equal scores break lexicographically.
// Checks the deadline once per candidate while scoring.
template <typename T, typename ScoreFn>
SolverRanking rank_by_score(const EmbeddedPool<T>& pool, ScoreFn&& score,
                            const Deadline& deadline) {
  SolverRanking out;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.words.size());
  for (std::size_t i = 0; i < pool.words.size(); ++i) {
    if (deadline.expired()) {
      out.timed_out = true;
      break;
    }
    scored.push_back({score(i), i});
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return pool.words[x.second] < pool.words[y.second];
  });
  out.candidates.reserve(scored.size());
  for (const auto& [s, i] : scored) out.candidates.push_back(pool.words[i]);
  return out;
}

// nearest neighbors of a query embedding by cosine distance
template <typename T>
SolverRanking retrieve_nearest(const std::vector<T>& query, const EmbeddedPool<T>& pool,
                               const Deadline& deadline = Deadline::unlimited()) {
  return rank_by_score(
      pool, [&](std::size_t i) { return cosine_distance(query, pool.embeddings[i]); }, deadline);
}

}  // namespace mann
