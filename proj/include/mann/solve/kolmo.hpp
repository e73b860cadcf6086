#pragma once

// Compression-based solving: find the cheapest edit program turning a into
// b, then replay it on c. Programs walk a cursor over the source and build
// the output from copies, verbatim insertions, and deletions, priced in
// bits. Replay on c re-spans copy and delete ranges through a monotone
// boundary map derived from the longest common subsequence of a and c
// (matched characters anchor exactly, unmatched stretches scale
// proportionally); insertions replay verbatim.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "mann/solve/ranking.hpp"
#include "mann/unicode.hpp"

namespace mann {

struct EditOp {
  enum class Kind { kCopy, kInsert, kDelete };
  Kind kind;
  int len = 0;  // copy/delete
  Word text;    // insert

  static EditOp copy(int len) { return {Kind::kCopy, len, {}}; }
  static EditOp insert(Word text) { return {Kind::kInsert, 0, std::move(text)}; }
  static EditOp del(int len) { return {Kind::kDelete, len, {}}; }
};

using EditProgram = std::vector<EditOp>;

inline int ceil_log2(int n) {
  int bits = 0;
  for (int v = n - 1; v > 0; v >>= 1) ++bits;
  return bits;
}

inline int op_cost_bits(const EditOp& op) {
  switch (op.kind) {
    case EditOp::Kind::kCopy:
      return 2 + ceil_log2(op.len + 1);
    case EditOp::Kind::kInsert:
      return 3 + 8 * static_cast<int>(op.text.size());
    case EditOp::Kind::kDelete:
      return 3 + ceil_log2(op.len + 1);
  }
  return 0;
}

inline int program_cost_bits(const EditProgram& program) {
  int bits = 0;
  for (const EditOp& op : program) bits += op_cost_bits(op);
  return bits;
}

// Applies the program to a source word. Copy and delete must stay in
// bounds; source characters beyond the final cursor are simply unused.
inline Word replay_program(const EditProgram& program, const Word& source) {
  Word out;
  std::size_t cursor = 0;
  for (const EditOp& op : program) {
    switch (op.kind) {
      case EditOp::Kind::kCopy:
        if (cursor + static_cast<std::size_t>(op.len) > source.size())
          throw std::runtime_error("edit program: copy past end of source");
        out.append(source, cursor, static_cast<std::size_t>(op.len));
        cursor += static_cast<std::size_t>(op.len);
        break;
      case EditOp::Kind::kInsert:
        out += op.text;
        break;
      case EditOp::Kind::kDelete:
        if (cursor + static_cast<std::size_t>(op.len) > source.size())
          throw std::runtime_error("edit program: delete past end of source");
        cursor += static_cast<std::size_t>(op.len);
        break;
    }
  }
  return out;
}

struct KolmoConfig {
  int node_limit = 1 << 20;  // search budget: states settled before giving up
};

// Cheapest program with replay_program(p, a) == b, by uniform-cost search
// over (source cursor, target cursor) states. Returns nullopt if the budget
// or the deadline runs out first.
inline std::optional<EditProgram> min_edit_program(const Word& a, const Word& b,
                                                   const KolmoConfig& cfg,
                                                   const Deadline& deadline = Deadline::unlimited()) {
  const int la = static_cast<int>(a.size());
  const int lb = static_cast<int>(b.size());
  const int states = (la + 1) * (lb + 1);
  auto id = [lb](int i, int j) { return i * (lb + 1) + j; };

  constexpr int kInf = 1 << 30;
  std::vector<int> dist(static_cast<std::size_t>(states), kInf);
  // predecessor state and the op that led here, for program reconstruction
  std::vector<int> prev(static_cast<std::size_t>(states), -1);
  std::vector<EditOp> via(static_cast<std::size_t>(states));
  std::vector<bool> settled(static_cast<std::size_t>(states), false);

  using Entry = std::pair<int, int>;  // (cost, state)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[static_cast<std::size_t>(id(0, 0))] = 0;
  queue.push({0, id(0, 0)});
  int budget = cfg.node_limit;

  auto relax = [&](int state, int cost, int from, EditOp op) {
    if (cost < dist[static_cast<std::size_t>(state)]) {
      dist[static_cast<std::size_t>(state)] = cost;
      prev[static_cast<std::size_t>(state)] = from;
      via[static_cast<std::size_t>(state)] = std::move(op);
      queue.push({cost, state});
    }
  };

  int goal = -1;
  while (!queue.empty()) {
    auto [cost, state] = queue.top();
    queue.pop();
    if (settled[static_cast<std::size_t>(state)]) continue;
    settled[static_cast<std::size_t>(state)] = true;
    if (--budget < 0 || deadline.expired()) return std::nullopt;
    int i = state / (lb + 1);
    int j = state % (lb + 1);
    if (j == lb) {
      goal = state;
      break;
    }
    // copy a matching run
    for (int len = 1; i + len <= la && j + len <= lb && a[static_cast<std::size_t>(i + len - 1)] ==
                                                            b[static_cast<std::size_t>(j + len - 1)];
         ++len)
      relax(id(i + len, j + len), cost + op_cost_bits(EditOp::copy(len)), state, EditOp::copy(len));
    // insert a prefix of the remaining target
    for (int len = 1; j + len <= lb; ++len)
      relax(id(i, j + len),
            cost + 3 + 8 * len, state,
            EditOp::insert(b.substr(static_cast<std::size_t>(j), static_cast<std::size_t>(len))));
    // skip source characters
    for (int len = 1; i + len <= la; ++len)
      relax(id(i + len, j), cost + op_cost_bits(EditOp::del(len)), state, EditOp::del(len));
  }
  if (goal < 0) return std::nullopt;

  EditProgram program;
  for (int state = goal; prev[static_cast<std::size_t>(state)] >= 0;
       state = prev[static_cast<std::size_t>(state)])
    program.push_back(via[static_cast<std::size_t>(state)]);
  std::reverse(program.begin(), program.end());
  return program;
}

// Longest common subsequence as matched index pairs, strictly increasing in
// both coordinates. Among equal-length subsequences the leftmost pairing is
// chosen, so a shared prefix anchors to the prefix rather than to a later
// occurrence of the same character.
inline std::vector<std::pair<int, int>> lcs_matches(const Word& a, const Word& c) {
  const int la = static_cast<int>(a.size());
  const int lc = static_cast<int>(c.size());
  // suffix[i][j] = LCS length of a[i..] and c[j..]
  std::vector<std::vector<int>> suffix(static_cast<std::size_t>(la + 1),
                                       std::vector<int>(static_cast<std::size_t>(lc + 1), 0));
  for (int i = la - 1; i >= 0; --i)
    for (int j = lc - 1; j >= 0; --j)
      suffix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          a[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(j)]
              ? suffix[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j + 1)] + 1
              : std::max(suffix[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)],
                         suffix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + 1)]);
  std::vector<std::pair<int, int>> matches;
  int i = 0, j = 0;
  while (i < la && j < lc) {
    if (a[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(j)] &&
        suffix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
            suffix[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j + 1)] + 1) {
      matches.push_back({i, j});
      ++i;
      ++j;
    } else if (suffix[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)] >=
               suffix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + 1)]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matches;
}

// Monotone map from cursor boundaries in a to boundaries in c: matched
// characters pin their boundaries, everything in between interpolates
// proportionally (round half up).
inline std::vector<int> boundary_map(const Word& a, const Word& c) {
  const int la = static_cast<int>(a.size());
  const int lc = static_cast<int>(c.size());
  std::vector<int> phi(static_cast<std::size_t>(la + 1), -1);
  phi[0] = 0;
  phi[static_cast<std::size_t>(la)] = lc;
  for (const auto& [i, j] : lcs_matches(a, c)) {
    if (phi[static_cast<std::size_t>(i)] < 0) phi[static_cast<std::size_t>(i)] = j;
    if (phi[static_cast<std::size_t>(i + 1)] < 0) phi[static_cast<std::size_t>(i + 1)] = j + 1;
  }
  int left = 0;
  for (int b = 1; b <= la; ++b) {
    if (phi[static_cast<std::size_t>(b)] >= 0) {
      left = b;
      continue;
    }
    int right = b + 1;
    while (phi[static_cast<std::size_t>(right)] < 0) ++right;
    double y0 = phi[static_cast<std::size_t>(left)];
    double y1 = phi[static_cast<std::size_t>(right)];
    double t = static_cast<double>(b - left) / static_cast<double>(right - left);
    phi[static_cast<std::size_t>(b)] = static_cast<int>(std::floor(y0 + t * (y1 - y0) + 0.5));
  }
  return phi;
}

// Replays a program built for word a on word c by re-spanning copy and
// delete ranges through the boundary map. Always produces a word.
inline Word reanchor_apply(const EditProgram& program, const Word& a, const Word& c) {
  std::vector<int> phi = boundary_map(a, c);
  Word out;
  int cursor_a = 0;
  for (const EditOp& op : program) {
    switch (op.kind) {
      case EditOp::Kind::kCopy: {
        int from = phi[static_cast<std::size_t>(cursor_a)];
        int to = phi[static_cast<std::size_t>(cursor_a + op.len)];
        out.append(c, static_cast<std::size_t>(from), static_cast<std::size_t>(to - from));
        cursor_a += op.len;
        break;
      }
      case EditOp::Kind::kInsert:
        out += op.text;
        break;
      case EditOp::Kind::kDelete:
        cursor_a += op.len;
        break;
    }
  }
  return out;
}

struct KolmoSolution {
  Word word;
  EditProgram program;
  int cost_bits = 0;
};

inline std::optional<KolmoSolution> kolmo_solve_detailed(
    const AnalogyEquation& eq, const KolmoConfig& cfg,
    const Deadline& deadline = Deadline::unlimited()) {
  std::optional<EditProgram> program = min_edit_program(eq.a, eq.b, cfg, deadline);
  if (!program) return std::nullopt;
  return KolmoSolution{reanchor_apply(*program, eq.a, eq.c), *program,
                       program_cost_bits(*program)};
}

// single-candidate ranking; empty (and possibly timed out) when the search
// gave up
inline SolverRanking solve_kolmo(const AnalogyEquation& eq, const KolmoConfig& cfg,
                                 const Deadline& deadline = Deadline::unlimited()) {
  SolverRanking out;
  std::optional<KolmoSolution> solution = kolmo_solve_detailed(eq, cfg, deadline);
  if (solution) {
    out.candidates.push_back(solution->word);
  } else {
    out.timed_out = deadline.expired();
  }
  return out;
}

}  // namespace mann
