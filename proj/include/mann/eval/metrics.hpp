#pragma once

// Evaluation metrics: confusion-matrix scores for the classifier, hit rate
// at k for retrieval rankings, and exact/positional accuracy for generated
// words.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mann/solve/ranking.hpp"
#include "mann/unicode.hpp"

namespace mann {

struct ClassificationMetrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double tpr = 0.0;  // undefined when no positives exist
  bool tpr_defined = false;
  double tnr = 0.0;  // undefined when no negatives exist
  bool tnr_defined = false;
  // weighted by class counts: (tpr * P + tnr * N) / (P + N)
  double balanced_accuracy = 0.0;
  bool balanced_accuracy_defined = false;  // needs both classes present
  double f1 = 0.0;                         // positive class
  bool f1_defined = false;                 // needs a positive somewhere
};

// threshold 0.5: scores >= 0.5 count as positive
template <typename T>
ClassificationMetrics classification_metrics(const std::vector<T>& scores,
                                             const std::vector<int>& labels,
                                             double threshold = 0.5) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("classification_metrics: size mismatch");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool predicted = static_cast<double>(scores[i]) >= threshold;
    bool actual = labels[i] != 0;
    if (predicted && actual) ++m.tp;
    else if (predicted && !actual) ++m.fp;
    else if (!predicted && actual) ++m.fn;
    else ++m.tn;
  }
  long total = m.tp + m.fp + m.tn + m.fn;
  if (total > 0) m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(total);
  long pos = m.tp + m.fn, neg = m.tn + m.fp;
  if (pos > 0) {
    m.tpr = static_cast<double>(m.tp) / static_cast<double>(pos);
    m.tpr_defined = true;
  }
  if (neg > 0) {
    m.tnr = static_cast<double>(m.tn) / static_cast<double>(neg);
    m.tnr_defined = true;
  }
  if (pos > 0 && neg > 0) {
    m.balanced_accuracy =
        (m.tpr * static_cast<double>(pos) + m.tnr * static_cast<double>(neg)) / static_cast<double>(total);
    m.balanced_accuracy_defined = true;
  }
  if (2 * m.tp + m.fp + m.fn > 0) {
    m.f1 = 2.0 * static_cast<double>(m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn);
    m.f1_defined = true;
  }
  return m;
}

inline const std::vector<int>& hit_at_k_values() {
  static const std::vector<int> ks{1, 3, 5, 10};
  return ks;
}

// Fraction of equations whose gold word appears in the top k candidates.
// Timed-out and empty rankings are misses at every k.
inline std::map<int, double> hit_at_k(const std::vector<SolverRanking>& rankings,
                                      const std::vector<Word>& golds,
                                      const std::vector<int>& ks = hit_at_k_values()) {
  if (rankings.size() != golds.size())
    throw std::invalid_argument("hit_at_k: size mismatch");
  std::map<int, double> rates;
  for (int k : ks) rates[k] = 0.0;
  if (rankings.empty()) return rates;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (rankings[i].timed_out) continue;
    const auto& cands = rankings[i].candidates;
    for (int k : ks) {
      std::size_t depth = std::min(cands.size(), static_cast<std::size_t>(k));
      for (std::size_t r = 0; r < depth; ++r) {
        if (cands[r] == golds[i]) {
          rates[k] += 1.0;
          break;
        }
      }
    }
  }
  for (int k : ks) rates[k] /= static_cast<double>(rankings.size());
  return rates;
}

struct GenerationMetrics {
  double word_accuracy = 0.0;   // exact match
  double char_accuracy = 0.0;   // positional matches over max(|pred|, |gold|), averaged
  double truncation_rate = 0.0;  // decodes that hit the step budget
};

inline GenerationMetrics generation_metrics(const std::vector<Word>& predictions,
                                            const std::vector<Word>& golds,
                                            const std::vector<bool>& truncated = {}) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("generation_metrics: size mismatch");
  if (!truncated.empty() && truncated.size() != predictions.size())
    throw std::invalid_argument("generation_metrics: truncation flag size mismatch");
  GenerationMetrics m;
  if (predictions.empty()) return m;
  for (bool t : truncated)
    if (t) m.truncation_rate += 1.0;
  m.truncation_rate /= static_cast<double>(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Word& p = predictions[i];
    const Word& g = golds[i];
    if (p == g) m.word_accuracy += 1.0;
    std::size_t longer = std::max(p.size(), g.size());
    if (longer == 0) {
      m.char_accuracy += 1.0;  // both empty
      continue;
    }
    std::size_t matches = 0;
    for (std::size_t j = 0; j < std::min(p.size(), g.size()); ++j)
      if (p[j] == g[j]) ++matches;
    m.char_accuracy += static_cast<double>(matches) / static_cast<double>(longer);
  }
  m.word_accuracy /= static_cast<double>(predictions.size());
  m.char_accuracy /= static_cast<double>(predictions.size());
  return m;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

}  // namespace mann
