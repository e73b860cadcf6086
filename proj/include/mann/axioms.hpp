#pragma once

// Equivalent forms of an analogical proportion and the corrupted forms used
// as negative examples. A:B::C:D is closed under exchanging the two ratios
// (C:D::A:B) and permuting the means (A:C::B:D); the closure has 8 elements.

#include <algorithm>
#include <array>
#include <vector>

#include "mann/data.hpp"
#include "mann/rng.hpp"

namespace mann {

inline AnalogyQuadruple permute(const AnalogyQuadruple& q, int pa, int pb, int pc, int pd) {
  std::array<const Word*, 4> w{&q.a, &q.b, &q.c, &q.d};
  return {*w[pa], *w[pb], *w[pc], *w[pd], q.feature};
}

// The original proportion followed by its 7 equivalent permutations.
inline std::vector<AnalogyQuadruple> valid_forms(const AnalogyQuadruple& q) {
  return {
      q,
      permute(q, 0, 2, 1, 3),  // A:C::B:D
      permute(q, 3, 1, 2, 0),  // D:B::C:A
      permute(q, 2, 0, 3, 1),  // C:A::D:B
      permute(q, 2, 3, 0, 1),  // C:D::A:B
      permute(q, 1, 0, 3, 2),  // B:A::D:C
      permute(q, 3, 2, 1, 0),  // D:C::B:A
      permute(q, 1, 3, 0, 2),  // B:D::A:C
  };
}

// Three corruptions of each valid form (b:a::c:d, c:b::a:d, a:a::c:d),
// in valid-form order: 24 quadruples, before any filtering.
inline std::vector<AnalogyQuadruple> invalid_forms(const AnalogyQuadruple& q) {
  std::vector<AnalogyQuadruple> out;
  out.reserve(24);
  for (const AnalogyQuadruple& v : valid_forms(q)) {
    out.push_back(permute(v, 1, 0, 2, 3));                // b:a::c:d
    out.push_back(permute(v, 2, 1, 0, 3));                // c:b::a:d
    out.push_back({v.a, v.a, v.c, v.d, v.feature});       // a:a::c:d
  }
  return out;
}

struct AugmentedBatch {
  std::vector<AnalogyQuadruple> valid;    // always the 8 equivalent forms
  std::vector<AnalogyQuadruple> invalid;  // 8 sampled corruptions, or empty
  bool valid_only = false;                // every corruption collided with a valid form
};

// Negative sampling for classifier training. Corruptions that are
// string-equal to any valid form are discarded, the distinct survivors are
// sampled without replacement when at least 8 remain, and otherwise all
// survivors are kept and topped up with replacement to 8, so every survivor
// appears at least once. Degenerate proportions can leave no survivors at
// all; those batches are flagged and carry positives only.
inline AugmentedBatch augment_for_classification(const AnalogyQuadruple& q, Rng& rng) {
  AugmentedBatch batch;
  batch.valid = valid_forms(q);

  std::vector<AnalogyQuadruple> survivors;
  for (const AnalogyQuadruple& inv : invalid_forms(q)) {
    bool collides = false;
    for (const AnalogyQuadruple& v : batch.valid) {
      if (inv.same_words(v)) {
        collides = true;
        break;
      }
    }
    if (collides) continue;
    bool duplicate = false;
    for (const AnalogyQuadruple& s : survivors) {
      if (inv.same_words(s)) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) survivors.push_back(inv);
  }

  if (survivors.empty()) {
    batch.valid_only = true;
    return batch;
  }
  if (survivors.size() >= 8) {
    std::vector<std::size_t> order = rng.permutation(survivors.size());
    for (std::size_t k = 0; k < 8; ++k) batch.invalid.push_back(survivors[order[k]]);
  } else {
    batch.invalid = survivors;
    while (batch.invalid.size() < 8)
      batch.invalid.push_back(survivors[rng.below(survivors.size())]);
  }
  return batch;
}

struct RegressionEquation {
  Word a, b, c;  // solve a : b :: c : x
  Word gold;
};

// The 8 solvable rearrangements of A:B::C:D. Their golds form the multiset
// {A, A, B, B, C, C, D, D}.
inline std::vector<RegressionEquation> augment_for_regression(const AnalogyQuadruple& q) {
  return {
      {q.a, q.b, q.c, q.d},  // A:B::C:x = D
      {q.a, q.c, q.b, q.d},  // A:C::B:x = D
      {q.d, q.b, q.c, q.a},  // D:B::C:x = A
      {q.c, q.a, q.d, q.b},  // C:A::D:x = B
      {q.c, q.d, q.a, q.b},  // C:D::A:x = B
      {q.b, q.a, q.d, q.c},  // B:A::D:x = C
      {q.d, q.c, q.b, q.a},  // D:C::B:x = A
      {q.b, q.d, q.a, q.c},  // B:D::A:x = C
  };
}

}  // namespace mann
