#pragma once

// Randomized symbolic solving by shuffle and deletion. A trial interleaves b
// and c uniformly at random (both keep their internal order), then deletes
// the characters of a from the shuffle as a left-to-right subsequence; if a
// is not a subsequence the trial produces nothing. Candidates are ranked by
// how often the trials produce them. Every candidate satisfies the
// character-bag identity bag(b) - bag(a) + bag(c) with the subtraction
// floored at zero; a trial whose deletion dips into c's characters (possible
// when a needs characters b lacks) misses that bag and is discarded.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "mann/rng.hpp"
#include "mann/solve/ranking.hpp"
#include "mann/unicode.hpp"

namespace mann {

using Bag = std::map<char32_t, int>;

inline Bag bag_of(const Word& w) {
  Bag bag;
  for (char32_t c : w) ++bag[c];
  return bag;
}

// (bag(b) - bag(a)) + bag(c), each count floored at zero after subtracting
inline Bag bag_target(const Word& a, const Word& b, const Word& c) {
  Bag out = bag_of(b);
  for (const auto& [ch, count] : bag_of(a)) {
    auto it = out.find(ch);
    if (it == out.end()) continue;
    it->second -= count;
    if (it->second <= 0) out.erase(it);
  }
  for (const auto& [ch, count] : bag_of(c)) out[ch] += count;
  return out;
}

// uniform over all interleavings of b and c that keep both internal orders
inline Word interleave_shuffle(const Word& b, const Word& c, Rng& rng) {
  Word out;
  out.reserve(b.size() + c.size());
  std::size_t ib = 0, ic = 0;
  while (ib < b.size() && ic < c.size()) {
    std::size_t remaining = (b.size() - ib) + (c.size() - ic);
    if (rng.below(remaining) < b.size() - ib)
      out.push_back(b[ib++]);
    else
      out.push_back(c[ic++]);
  }
  out.append(b, ib);
  out.append(c, ic);
  return out;
}

// removes a as a left-to-right subsequence (earliest match); nullopt if a is
// not a subsequence of w
inline std::optional<Word> delete_subsequence(const Word& w, const Word& a) {
  Word out;
  out.reserve(w.size());
  std::size_t next = 0;
  for (char32_t ch : w) {
    if (next < a.size() && ch == a[next])
      ++next;
    else
      out.push_back(ch);
  }
  if (next < a.size()) return std::nullopt;
  return out;
}

inline std::optional<Word> alea_trial(const AnalogyEquation& eq, Rng& rng) {
  return delete_subsequence(interleave_shuffle(eq.b, eq.c, rng), eq.a);
}

struct AleaConfig {
  int trials = 1000;
};

// Ranked by descending trial frequency, ties broken lexicographically.
inline SolverRanking solve_alea(const AnalogyEquation& eq, const AleaConfig& cfg, Rng& rng,
                                const Deadline& deadline = Deadline::unlimited()) {
  SolverRanking out;
  const Bag target = bag_target(eq.a, eq.b, eq.c);
  std::map<Word, int> counts;
  for (int t = 0; t < cfg.trials; ++t) {
    if (deadline.expired()) {
      out.timed_out = true;
      break;
    }
    if (std::optional<Word> result = alea_trial(eq, rng))
      if (bag_of(*result) == target) ++counts[*result];
  }
  std::vector<std::pair<int, const Word*>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [word, count] : counts) ranked.push_back({count, &word});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return *x.second < *y.second;
  });
  for (const auto& [count, word] : ranked) out.candidates.push_back(*word);
  return out;
}

}  // namespace mann
