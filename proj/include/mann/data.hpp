#pragma once

// Inflection data ingestion: tab-separated (lemma, features, form) triples,
// analogy corpus construction from shared feature tags, symmetric
// deduplication, and seeded disjoint splits.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mann/rng.hpp"
#include "mann/unicode.hpp"
#include "mann/vocab.hpp"

namespace mann {

struct InflectionTriple {
  Word lemma;
  std::string features;  // morphological tag, kept verbatim
  Word form;

  bool operator==(const InflectionTriple& o) const {
    return lemma == o.lemma && features == o.features && form == o.form;
  }
};

enum class ColumnOrder {
  kLemmaFeaturesForm,  // Sigmorphon 2016 layout
  kLemmaFormFeatures,  // Sigmorphon 2019 layout
};

struct ParseWarning {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<InflectionTriple> triples;
  std::vector<ParseWarning> warnings;
};

// Lenient by default: malformed lines are skipped with a warning. In strict
// mode the first malformed line throws.
inline ParseResult parse_inflection_stream(std::istream& in,
                                           ColumnOrder order = ColumnOrder::kLemmaFeaturesForm,
                                           bool strict = false) {
  ParseResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    std::string problem;
    if (fields.size() != 3) {
      problem = "expected 3 tab-separated fields, got " + std::to_string(fields.size());
    } else if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      problem = "empty field";
    }
    if (problem.empty()) {
      const std::string& lemma = fields[0];
      const std::string& features = order == ColumnOrder::kLemmaFeaturesForm ? fields[1] : fields[2];
      const std::string& form = order == ColumnOrder::kLemmaFeaturesForm ? fields[2] : fields[1];
      Word lemma_w, form_w;
      if (!utf8_decode(lemma, lemma_w) || !utf8_decode(form, form_w)) {
        problem = "invalid UTF-8";
      } else {
        result.triples.push_back({std::move(lemma_w), features, std::move(form_w)});
      }
    }
    if (!problem.empty()) {
      if (strict)
        throw std::runtime_error("line " + std::to_string(line_number) + ": " + problem);
      result.warnings.push_back({line_number, problem});
    }
  }
  return result;
}

struct AnalogyQuadruple {
  Word a, b, c, d;
  std::string feature;  // shared tag the pair was drawn from

  bool same_words(const AnalogyQuadruple& o) const {
    return a == o.a && b == o.b && c == o.c && d == o.d;
  }
};

inline std::string serialize_quadruple(const AnalogyQuadruple& q) {
  return word_to_utf8(q.a) + '\t' + word_to_utf8(q.b) + '\t' + word_to_utf8(q.c) + '\t' +
         word_to_utf8(q.d);
}

// One quadruple (lemma1 : form1 :: lemma2 : form2) per unordered pair of
// triples sharing a feature tag; pairing a triple with itself gives the
// identity proportion a : b :: a : b. Output order follows input order.
inline std::vector<AnalogyQuadruple> build_analogy_corpus(
    const std::vector<InflectionTriple>& triples) {
  std::map<std::string, std::vector<std::size_t>> by_tag;
  for (std::size_t i = 0; i < triples.size(); ++i) by_tag[triples[i].features].push_back(i);
  std::vector<AnalogyQuadruple> corpus;
  for (const auto& [tag, members] : by_tag) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x; y < members.size(); ++y) {
        const InflectionTriple& t1 = triples[members[x]];
        const InflectionTriple& t2 = triples[members[y]];
        corpus.push_back({t1.lemma, t1.form, t2.lemma, t2.form, tag});
      }
    }
  }
  return corpus;
}

// A:B::C:D and C:D::A:B describe the same proportion. Each quadruple is
// canonicalized to the lexicographically smaller serialization of the two and
// the first occurrence wins. Identity forms map to themselves and are kept.
inline std::vector<AnalogyQuadruple> dedup_analogies(const std::vector<AnalogyQuadruple>& corpus) {
  std::vector<AnalogyQuadruple> out;
  std::unordered_set<std::string> seen;
  out.reserve(corpus.size());
  for (const AnalogyQuadruple& q : corpus) {
    AnalogyQuadruple swapped{q.c, q.d, q.a, q.b, q.feature};
    const AnalogyQuadruple& canon =
        std::tie(q.a, q.b, q.c, q.d) <= std::tie(swapped.a, swapped.b, swapped.c, swapped.d)
            ? q
            : swapped;
    std::string key = serialize_quadruple(canon);
    if (seen.insert(std::move(key)).second) out.push_back(canon);
  }
  return out;
}

struct SplitSizes {
  std::size_t dev = 500;
  std::size_t test = 5000;      // truncated to what remains after dev
  std::size_t train_max = 50000;
};

struct CorpusSplit {
  std::vector<AnalogyQuadruple> train, dev, test;
  std::vector<Word> word_pool;  // retrieval candidates: every word in the source data
  std::uint64_t seed = 0;
};

// Disjoint uniform samples in the order dev, test, train. The word pool is
// deduplicated and sorted so it does not depend on input order.
inline CorpusSplit split_corpus(const std::vector<AnalogyQuadruple>& corpus,
                                const std::vector<Word>& source_words, std::uint64_t seed,
                                const SplitSizes& sizes = {}) {
  if (corpus.size() < sizes.dev + 1)
    throw std::runtime_error("corpus has " + std::to_string(corpus.size()) +
                             " quadruples, need more than dev size " + std::to_string(sizes.dev));
  CorpusSplit split;
  split.seed = seed;
  std::set<Word> pool(source_words.begin(), source_words.end());
  split.word_pool.assign(pool.begin(), pool.end());

  Rng rng(seed);
  std::vector<std::size_t> idx = rng.permutation(corpus.size());
  std::size_t at = 0;
  auto take = [&](std::size_t count) {
    std::vector<AnalogyQuadruple> part;
    count = std::min(count, corpus.size() - at);
    part.reserve(count);
    for (std::size_t k = 0; k < count; ++k) part.push_back(corpus[idx[at++]]);
    return part;
  };
  split.dev = take(sizes.dev);
  split.test = take(sizes.test);
  split.train = take(sizes.train_max);
  return split;
}

struct WordDatasetSizes {
  std::size_t train_max = 40000;
  std::size_t dev = 500;
  std::size_t test = 500;
};

struct WordDataset {
  std::vector<Word> train, dev, test;
  Vocabulary vocab;  // built from the characters of train + dev + test
  std::uint64_t seed = 0;
};

inline std::vector<Word> words_of(const std::vector<InflectionTriple>& triples) {
  std::vector<Word> words;
  words.reserve(triples.size() * 2);
  for (const InflectionTriple& t : triples) {
    words.push_back(t.lemma);
    words.push_back(t.form);
  }
  return words;
}

// Autoencoding data: distinct words, split disjointly. Words are sorted
// before shuffling so the split depends only on the seed and the word set.
inline WordDataset build_word_dataset(const std::vector<Word>& words, std::uint64_t seed,
                                      const WordDatasetSizes& sizes = {}) {
  std::set<Word> distinct(words.begin(), words.end());
  if (distinct.size() < sizes.dev + sizes.test)
    throw std::runtime_error("word dataset needs at least " +
                             std::to_string(sizes.dev + sizes.test) + " distinct words, got " +
                             std::to_string(distinct.size()));
  std::vector<Word> all(distinct.begin(), distinct.end());
  Rng rng(seed);
  rng.shuffle(all);

  WordDataset ds;
  ds.seed = seed;
  std::size_t at = 0;
  auto take = [&](std::size_t count, std::vector<Word>& out) {
    count = std::min(count, all.size() - at);
    out.assign(all.begin() + static_cast<std::ptrdiff_t>(at),
               all.begin() + static_cast<std::ptrdiff_t>(at + count));
    at += count;
  };
  take(sizes.dev, ds.dev);
  take(sizes.test, ds.test);
  take(sizes.train_max, ds.train);

  std::vector<Word> kept;
  kept.reserve(ds.train.size() + ds.dev.size() + ds.test.size());
  kept.insert(kept.end(), ds.train.begin(), ds.train.end());
  kept.insert(kept.end(), ds.dev.begin(), ds.dev.end());
  kept.insert(kept.end(), ds.test.begin(), ds.test.end());
  ds.vocab = Vocabulary::from_words(kept);
  return ds;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace mann
