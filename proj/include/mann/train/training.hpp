#pragma once

// Training loops: autoencoder pretraining, classifier training over
// augmented quadruples, two-phase embedder + regressor training, and joint
// encoder + regressor training with a scheduled loss mix. Every loop shuffles
// with its own seeded generator, evaluates on dev each epoch, early-stops on
// the dev metric, and restores the best parameters before returning.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mann/axioms.hpp"
#include "mann/data.hpp"
#include "mann/eval/metrics.hpp"
#include "mann/models/annc.hpp"
#include "mann/models/annr.hpp"
#include "mann/models/autoencoder.hpp"
#include "mann/models/cnn_embedder.hpp"
#include "mann/nn/loss.hpp"
#include "mann/nn/optim.hpp"
#include "mann/rng.hpp"

namespace mann {

// Mixing weight for the joint encoder + regressor objective: ramps linearly
// over the first five epochs, clamped to [0.01, 0.99] so neither term ever
// vanishes. Epochs are counted from zero.
inline double lambda_schedule(int epoch) {
  return std::min(std::max(static_cast<double>(epoch) / 5.0, 0.01), 0.99);
}

struct TrainConfig {
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int max_epochs = 50;
  int patience = 5;         // epochs without dev improvement before stopping
  int phase1_patience = 3;  // two-phase training: patience of the frozen phase
  double clip_norm = 0.0;   // global gradient norm cap; 0 disables clipping
  std::uint64_t seed = 0;
  std::uint64_t dev_seed = 1;  // fixed seed for dev-set augmentation

  static TrainConfig autoencoder_defaults() {
    TrainConfig c;
    c.optimizer = nn::OptimizerKind::kNadam;
    c.learning_rate = 1e-2;
    c.batch_size = 2048;
    c.max_epochs = 100;
    c.clip_norm = 5.0;
    return c;
  }

  static TrainConfig classifier_defaults() {
    TrainConfig c;
    c.batch_size = 256;
    return c;
  }

  static TrainConfig embedder_regressor_defaults() {
    TrainConfig c;
    c.batch_size = 256;
    return c;
  }

  static TrainConfig encoder_regressor_defaults() {
    TrainConfig c;
    c.batch_size = 512;
    c.clip_norm = 5.0;
    return c;
  }
};

inline std::string optimizer_name(nn::OptimizerKind kind) {
  return kind == nn::OptimizerKind::kAdam ? "adam" : "nadam";
}

inline nn::OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adam") return nn::OptimizerKind::kAdam;
  if (name == "nadam") return nn::OptimizerKind::kNadam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"optimizer", optimizer_name(c.optimizer)},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"phase1_patience", c.phase1_patience},
          {"clip_norm", c.clip_norm},
          {"seed", c.seed},
          {"dev_seed", c.dev_seed}};
}

// Missing keys keep the values already in `c`, so callers can layer a partial
// config over per-model defaults.
inline void merge_from_json(TrainConfig& c, const nlohmann::json& j) {
  if (j.contains("optimizer")) c.optimizer = optimizer_from_name(j["optimizer"].get<std::string>());
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.phase1_patience = j.value("phase1_patience", c.phase1_patience);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  c.dev_seed = j.value("dev_seed", c.dev_seed);
}

struct EpochRecord {
  int epoch = 0;  // 1-based, global across phases
  int phase = 1;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_metric = 0.0;
  double lambda = 0.0;  // loss mix, joint objective only
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::string stopping_reason;  // max_epochs | early_stopping | divergence
  int best_epoch = -1;
  double best_dev_metric = 0.0;
  double wall_seconds = 0.0;
  std::map<std::string, double> final_metrics;
  // two-phase training: checksum of the frozen parameters before and after
  // phase 1; equal values demonstrate the freeze held
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
};

inline nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"train_loss", e.train_loss},
                      {"dev_loss", e.dev_loss},
                      {"dev_metric", e.dev_metric},
                      {"lambda", e.lambda}});
  return {{"kind", "train_report"},
          {"epochs", epochs},
          {"stopping_reason", r.stopping_reason},
          {"best_epoch", r.best_epoch},
          {"best_dev_metric", r.best_dev_metric},
          {"wall_seconds", r.wall_seconds},
          {"final_metrics", r.final_metrics},
          {"frozen_checksum_before", r.frozen_checksum_before},
          {"frozen_checksum_after", r.frozen_checksum_after}};
}

inline TrainReport train_report_from_json(const nlohmann::json& j) {
  TrainReport r;
  for (const auto& e : j.at("epochs"))
    r.epochs.push_back({e.at("epoch").get<int>(), e.at("phase").get<int>(),
                        e.at("train_loss").get<double>(), e.at("dev_loss").get<double>(),
                        e.at("dev_metric").get<double>(), e.at("lambda").get<double>()});
  r.stopping_reason = j.at("stopping_reason").get<std::string>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_dev_metric = j.at("best_dev_metric").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.final_metrics = j.at("final_metrics").get<std::map<std::string, double>>();
  r.frozen_checksum_before = j.at("frozen_checksum_before").get<std::uint64_t>();
  r.frozen_checksum_after = j.at("frozen_checksum_after").get<std::uint64_t>();
  return r;
}

// Equality up to wall time, for reproducibility checks.
inline bool reports_equivalent(const TrainReport& a, const TrainReport& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto& x = a.epochs[i];
    const auto& y = b.epochs[i];
    if (x.epoch != y.epoch || x.phase != y.phase || x.train_loss != y.train_loss ||
        x.dev_loss != y.dev_loss || x.dev_metric != y.dev_metric || x.lambda != y.lambda)
      return false;
  }
  return a.stopping_reason == b.stopping_reason && a.best_epoch == b.best_epoch &&
         a.best_dev_metric == b.best_dev_metric && a.final_metrics == b.final_metrics &&
         a.frozen_checksum_before == b.frozen_checksum_before &&
         a.frozen_checksum_after == b.frozen_checksum_after;
}

template <typename T>
std::map<std::string, std::vector<T>> snapshot_params(const std::vector<nn::Parameter<T>*>& params) {
  std::map<std::string, std::vector<T>> snap;
  for (const auto* p : params) snap[p->name] = p->value.values();
  return snap;
}

template <typename T>
void restore_params(const std::vector<nn::Parameter<T>*>& params,
                    const std::map<std::string, std::vector<T>>& snap) {
  for (auto* p : params) {
    auto it = snap.find(p->name);
    if (it == snap.end()) throw std::runtime_error("restore_params: missing " + p->name);
    if (it->second.size() != p->value.values().size())
      throw std::runtime_error("restore_params: size mismatch for " + p->name);
    p->value.values() = it->second;
  }
}

// Order-sensitive hash of names and raw values; detects any parameter drift.
template <typename T>
std::uint64_t params_checksum(const std::vector<nn::Parameter<T>*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto* p : params) {
    h = fnv1a64(p->name.data(), p->name.size(), h);
    h = fnv1a64(p->value.values().data(), p->value.values().size() * sizeof(T), h);
  }
  return h;
}

namespace detail {

struct EarlyStopper {
  int patience = 5;
  bool higher_better = true;
  double best = 0.0;
  int best_epoch = -1;
  int stale = 0;

  // returns true when `value` improves on the best seen so far
  bool observe(double value, int epoch) {
    bool better = best_epoch < 0 || (higher_better ? value > best : value < best);
    if (better) {
      best = value;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    return better;
  }

  bool exhausted() const { return stale >= patience; }
};

inline std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n,
                                                              std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += batch_size) {
    std::size_t end = std::min(n, at + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

struct WallTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace detail

// --- autoencoder pretraining ---

// Teacher-forced reconstruction training; the dev metric is round-trip word
// accuracy under greedy decoding.
template <typename T>
TrainReport pretrain_autoencoder(Autoencoder<T>& ae, const std::vector<Word>& train,
                                 const std::vector<Word>& dev, const TrainConfig& cfg) {
  if (train.empty() || dev.empty())
    throw std::invalid_argument("pretrain_autoencoder: empty train or dev set");
  detail::WallTimer timer;
  TrainReport report;
  Rng rng(cfg.seed);
  nn::Optimizer<T> opt(cfg.optimizer, static_cast<T>(cfg.learning_rate));
  auto params = ae.params();

  auto dev_eval = [&](double& loss, double& accuracy) {
    nn::NoGradGuard ng;
    double total = 0.0;
    std::size_t exact = 0;
    for (const Word& w : dev) {
      nn::Tensor<T> emb = ae.encode(w);
      total += static_cast<double>(
          nn::ce_loss(ae.decode_teacher(emb, w), ae.teacher_targets(w)).item());
      auto decoded = ae.decode_greedy(emb, ae.decode_budget(w.size()));
      if (!decoded.truncated && decoded.word == w) ++exact;
    }
    loss = total / static_cast<double>(dev.size());
    accuracy = static_cast<double>(exact) / static_cast<double>(dev.size());
  };

  detail::EarlyStopper stopper{cfg.patience, true};
  std::map<std::string, std::vector<T>> best;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<nn::Tensor<T>> losses;
      losses.reserve(batch.size());
      for (std::size_t i : batch) {
        const Word& w = train[i];
        losses.push_back(nn::ce_loss(ae.decode_teacher(ae.encode(w), w), ae.teacher_targets(w)));
      }
      nn::Tensor<T> loss = nn::scale(nn::add_n(losses), T{1} / static_cast<T>(losses.size()));
      loss.backward();
      if (cfg.clip_norm > 0) nn::clip_global_norm(params, static_cast<T>(cfg.clip_norm));
      opt.step(params);
      train_loss += static_cast<double>(loss.item()) * static_cast<double>(batch.size());
      seen += batch.size();
    }
    train_loss /= static_cast<double>(seen);

    double dev_loss = 0.0, dev_accuracy = 0.0;
    dev_eval(dev_loss, dev_accuracy);
    report.epochs.push_back({epoch, 1, train_loss, dev_loss, dev_accuracy, 0.0});

    if (!std::isfinite(train_loss)) {
      report.stopping_reason = "divergence";
      break;
    }
    if (stopper.observe(dev_accuracy, epoch)) best = snapshot_params(params);
    if (stopper.exhausted()) {
      report.stopping_reason = "early_stopping";
      break;
    }
  }
  if (report.stopping_reason.empty()) report.stopping_reason = "max_epochs";
  if (!best.empty()) restore_params(params, best);
  report.best_epoch = stopper.best_epoch;
  report.best_dev_metric = stopper.best;

  double dev_loss = 0.0, dev_accuracy = 0.0;
  dev_eval(dev_loss, dev_accuracy);
  report.final_metrics["dev_loss"] = dev_loss;
  report.final_metrics["dev_word_accuracy"] = dev_accuracy;
  report.wall_seconds = timer.seconds();
  return report;
}

// --- classifier training ---

namespace detail {

// Embeds every distinct word among the given forms exactly once so each
// quadruple's score shares its words' graph nodes.
template <typename T>
std::map<Word, nn::Tensor<T>> embed_distinct(const CnnEmbedder<T>& embedder,
                                             const std::vector<AnalogyQuadruple>& forms) {
  std::map<Word, nn::Tensor<T>> out;
  for (const auto& q : forms)
    for (const Word* w : {&q.a, &q.b, &q.c, &q.d})
      if (!out.count(*w)) out.emplace(*w, embedder.embed(*w));
  return out;
}

template <typename T>
void score_forms(CnnEmbedder<T>& embedder, Annc<T>& annc,
                 const std::vector<AnalogyQuadruple>& quadruples, Rng& rng,
                 std::vector<nn::Tensor<T>>& scores, std::vector<T>& labels) {
  std::vector<AnalogyQuadruple> forms;
  std::vector<T> form_labels;
  for (const auto& q : quadruples) {
    AugmentedBatch batch = augment_for_classification(q, rng);
    for (const auto& v : batch.valid) {
      forms.push_back(v);
      form_labels.push_back(T{1});
    }
    for (const auto& inv : batch.invalid) {
      forms.push_back(inv);
      form_labels.push_back(T{0});
    }
  }
  std::map<Word, nn::Tensor<T>> emb = embed_distinct(embedder, forms);
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const auto& f = forms[i];
    scores.push_back(annc.score(emb.at(f.a), emb.at(f.b), emb.at(f.c), emb.at(f.d)));
    labels.push_back(form_labels[i]);
  }
}

}  // namespace detail

// Joint training of the embedder and the classifier on augmented quadruples.
// Dev augmentation uses a fixed seed so the dev set is identical across
// epochs; the dev metric is balanced accuracy (accuracy if one class is
// absent).
template <typename T>
TrainReport train_classifier(CnnEmbedder<T>& embedder, Annc<T>& annc,
                             const std::vector<AnalogyQuadruple>& train,
                             const std::vector<AnalogyQuadruple>& dev, const TrainConfig& cfg) {
  if (train.empty() || dev.empty())
    throw std::invalid_argument("train_classifier: empty train or dev set");
  detail::WallTimer timer;
  TrainReport report;
  Rng rng(cfg.seed);
  nn::Optimizer<T> opt(cfg.optimizer, static_cast<T>(cfg.learning_rate));
  std::vector<nn::Parameter<T>*> params = embedder.params();
  for (auto* p : annc.params()) params.push_back(p);

  auto dev_eval = [&](double& loss, ClassificationMetrics& metrics) {
    nn::NoGradGuard ng;
    Rng dev_rng(cfg.dev_seed);
    std::vector<nn::Tensor<T>> scores;
    std::vector<T> labels;
    detail::score_forms(embedder, annc, dev, dev_rng, scores, labels);
    nn::Tensor<T> cat = nn::concat(scores);
    loss = static_cast<double>(nn::bce_loss(cat, labels).item());
    std::vector<int> int_labels(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) int_labels[i] = labels[i] > T{0} ? 1 : 0;
    metrics = classification_metrics(cat.values(), int_labels);
  };

  detail::EarlyStopper stopper{cfg.patience, true};
  std::map<std::string, std::vector<T>> best;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<AnalogyQuadruple> quads;
      quads.reserve(batch.size());
      for (std::size_t i : batch) quads.push_back(train[i]);
      std::vector<nn::Tensor<T>> scores;
      std::vector<T> labels;
      detail::score_forms(embedder, annc, quads, rng, scores, labels);
      nn::Tensor<T> loss = nn::bce_loss(nn::concat(scores), labels);
      loss.backward();
      if (cfg.clip_norm > 0) nn::clip_global_norm(params, static_cast<T>(cfg.clip_norm));
      opt.step(params);
      train_loss += static_cast<double>(loss.item()) * static_cast<double>(labels.size());
      seen += labels.size();
    }
    train_loss /= static_cast<double>(seen);

    double dev_loss = 0.0;
    ClassificationMetrics metrics;
    dev_eval(dev_loss, metrics);
    double dev_metric = metrics.balanced_accuracy_defined ? metrics.balanced_accuracy
                                                          : metrics.accuracy;
    report.epochs.push_back({epoch, 1, train_loss, dev_loss, dev_metric, 0.0});

    if (!std::isfinite(train_loss)) {
      report.stopping_reason = "divergence";
      break;
    }
    if (stopper.observe(dev_metric, epoch)) best = snapshot_params(params);
    if (stopper.exhausted()) {
      report.stopping_reason = "early_stopping";
      break;
    }
  }
  if (report.stopping_reason.empty()) report.stopping_reason = "max_epochs";
  if (!best.empty()) restore_params(params, best);
  report.best_epoch = stopper.best_epoch;
  report.best_dev_metric = stopper.best;

  double dev_loss = 0.0;
  ClassificationMetrics metrics;
  dev_eval(dev_loss, metrics);
  report.final_metrics["dev_loss"] = dev_loss;
  report.final_metrics["dev_accuracy"] = metrics.accuracy;
  if (metrics.balanced_accuracy_defined)
    report.final_metrics["dev_balanced_accuracy"] = metrics.balanced_accuracy;
  if (metrics.f1_defined) report.final_metrics["dev_f1"] = metrics.f1;
  report.wall_seconds = timer.seconds();
  return report;
}

// --- embedder + regressor, two phases ---

namespace detail {

inline std::vector<RegressionEquation> regression_equations(
    const std::vector<AnalogyQuadruple>& quads) {
  std::vector<RegressionEquation> eqs;
  eqs.reserve(quads.size() * 8);
  for (const auto& q : quads)
    for (auto& e : augment_for_regression(q)) eqs.push_back(std::move(e));
  return eqs;
}

// embeds each distinct word of the equations once, without a graph
template <typename T>
std::map<Word, std::vector<T>> embed_values_map(const CnnEmbedder<T>& embedder,
                                                const std::vector<RegressionEquation>& eqs) {
  std::map<Word, std::vector<T>> out;
  for (const auto& e : eqs)
    for (const Word* w : {&e.a, &e.b, &e.c, &e.gold})
      if (!out.count(*w)) out.emplace(*w, embedder.embed_values(*w));
  return out;
}

// mean squared error between predictions and gold embeddings, no graph
template <typename T>
double dev_regression_mse(Annr<T>& annr, const std::vector<RegressionEquation>& eqs,
                          const std::map<Word, std::vector<T>>& emb) {
  nn::NoGradGuard ng;
  double total = 0.0;
  for (const auto& e : eqs) {
    int dim = static_cast<int>(emb.at(e.a).size());
    nn::Tensor<T> pred = annr.predict(nn::Tensor<T>::from({dim}, emb.at(e.a)),
                                      nn::Tensor<T>::from({dim}, emb.at(e.b)),
                                      nn::Tensor<T>::from({dim}, emb.at(e.c)));
    nn::Tensor<T> gold = nn::Tensor<T>::from(pred.shape(), emb.at(e.gold));
    total += static_cast<double>(nn::mse_loss(gold, pred).item());
  }
  return total / static_cast<double>(eqs.size());
}

}  // namespace detail

// Phase 1 trains the regressor against a frozen embedder (its outputs are
// cached per word); phase 2 trains both jointly. The dev metric is mean
// squared error in embedding space, lower is better. The report's frozen
// checksums cover the embedder around phase 1.
template <typename T>
TrainReport train_embedder_regressor(CnnEmbedder<T>& embedder, Annr<T>& annr,
                                     const std::vector<AnalogyQuadruple>& train,
                                     const std::vector<AnalogyQuadruple>& dev,
                                     const TrainConfig& cfg) {
  if (train.empty() || dev.empty())
    throw std::invalid_argument("train_embedder_regressor: empty train or dev set");
  detail::WallTimer timer;
  TrainReport report;
  Rng rng(cfg.seed);
  nn::Optimizer<T> opt(cfg.optimizer, static_cast<T>(cfg.learning_rate));
  std::vector<nn::Parameter<T>*> annr_params = annr.params();
  std::vector<nn::Parameter<T>*> joint_params = embedder.params();
  for (auto* p : annr_params) joint_params.push_back(p);

  std::vector<RegressionEquation> dev_eqs = detail::regression_equations(dev);

  // phase 1: frozen embedder, cached embeddings
  report.frozen_checksum_before = params_checksum(embedder.params());
  std::map<Word, std::vector<T>> cache;
  auto cached = [&](const Word& w) -> const std::vector<T>& {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, embedder.embed_values(w)).first;
    return it->second;
  };

  std::map<Word, std::vector<T>> dev_emb = detail::embed_values_map(embedder, dev_eqs);

  int epoch = 0;
  detail::EarlyStopper stopper1{cfg.phase1_patience, false};
  std::map<std::string, std::vector<T>> best1;
  while (epoch < cfg.max_epochs) {
    ++epoch;
    double train_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<nn::Tensor<T>> preds, targets;
      for (std::size_t i : batch) {
        for (const auto& e : augment_for_regression(train[i])) {
          int dim = static_cast<int>(cached(e.a).size());
          preds.push_back(annr.predict(nn::Tensor<T>::from({dim}, cached(e.a)),
                                       nn::Tensor<T>::from({dim}, cached(e.b)),
                                       nn::Tensor<T>::from({dim}, cached(e.c))));
          targets.push_back(nn::Tensor<T>::from({dim}, cached(e.gold)));
        }
      }
      nn::Tensor<T> loss = nn::annr_loss(nn::stack_rows(targets), nn::stack_rows(preds),
                                         rng.derangement_preferring_permutation(preds.size()));
      loss.backward();
      if (cfg.clip_norm > 0) nn::clip_global_norm(annr_params, static_cast<T>(cfg.clip_norm));
      opt.step(annr_params);
      train_loss += static_cast<double>(loss.item()) * static_cast<double>(preds.size());
      seen += preds.size();
    }
    train_loss /= static_cast<double>(seen);

    double dev_mse = detail::dev_regression_mse(annr, dev_eqs, dev_emb);
    report.epochs.push_back({epoch, 1, train_loss, dev_mse, dev_mse, 0.0});

    if (!std::isfinite(train_loss)) {
      report.stopping_reason = "divergence";
      break;
    }
    if (stopper1.observe(dev_mse, epoch)) best1 = snapshot_params(annr_params);
    if (stopper1.exhausted()) break;
  }
  if (!best1.empty()) restore_params(annr_params, best1);
  report.frozen_checksum_after = params_checksum(embedder.params());

  // phase 2: joint, only kept when it beats the phase 1 result
  detail::EarlyStopper stopper2{cfg.patience, false};
  std::map<std::string, std::vector<T>> best2 = snapshot_params(joint_params);
  if (stopper1.best_epoch >= 0) {
    stopper2.best = stopper1.best;
    stopper2.best_epoch = stopper1.best_epoch;
  }
  while (report.stopping_reason.empty() && epoch < cfg.max_epochs) {
    ++epoch;
    double train_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<AnalogyQuadruple> quads;
      quads.reserve(batch.size());
      for (std::size_t i : batch) quads.push_back(train[i]);
      std::map<Word, nn::Tensor<T>> emb = detail::embed_distinct(embedder, quads);
      std::vector<nn::Tensor<T>> preds, targets;
      for (const auto& q : quads) {
        for (const auto& e : augment_for_regression(q)) {
          preds.push_back(annr.predict(emb.at(e.a), emb.at(e.b), emb.at(e.c)));
          targets.push_back(emb.at(e.gold));
        }
      }
      nn::Tensor<T> loss = nn::annr_loss(nn::stack_rows(targets), nn::stack_rows(preds),
                                         rng.derangement_preferring_permutation(preds.size()));
      loss.backward();
      if (cfg.clip_norm > 0) nn::clip_global_norm(joint_params, static_cast<T>(cfg.clip_norm));
      opt.step(joint_params);
      train_loss += static_cast<double>(loss.item()) * static_cast<double>(preds.size());
      seen += preds.size();
    }
    train_loss /= static_cast<double>(seen);

    double dev_mse =
        detail::dev_regression_mse(annr, dev_eqs, detail::embed_values_map(embedder, dev_eqs));
    report.epochs.push_back({epoch, 2, train_loss, dev_mse, dev_mse, 0.0});

    if (!std::isfinite(train_loss)) {
      report.stopping_reason = "divergence";
      break;
    }
    if (stopper2.observe(dev_mse, epoch)) best2 = snapshot_params(joint_params);
    if (stopper2.exhausted()) {
      report.stopping_reason = "early_stopping";
      break;
    }
  }
  if (report.stopping_reason.empty()) report.stopping_reason = "max_epochs";
  restore_params(joint_params, best2);
  report.best_epoch = stopper2.best_epoch >= 0 ? stopper2.best_epoch : stopper1.best_epoch;
  report.best_dev_metric = stopper2.best_epoch >= 0 ? stopper2.best : stopper1.best;

  report.final_metrics["dev_mse"] =
      detail::dev_regression_mse(annr, dev_eqs, detail::embed_values_map(embedder, dev_eqs));
  report.wall_seconds = timer.seconds();
  return report;
}

// --- encoder + regressor, joint objective ---

// Trains the regressor in the autoencoder's embedding space while teaching
// the decoder to read predicted embeddings: loss = (1 - lambda) * regression
// + lambda * decode, where the decode term is teacher-forced cross entropy of
// decode(prediction) against the gold word and lambda follows
// lambda_schedule. The dev metric is exact-match accuracy of decoded
// predictions on the un-augmented dev equations.
template <typename T>
TrainReport train_encoder_regressor(Autoencoder<T>& ae, Annr<T>& annr,
                                    const std::vector<AnalogyQuadruple>& train,
                                    const std::vector<AnalogyQuadruple>& dev,
                                    const TrainConfig& cfg) {
  if (train.empty() || dev.empty())
    throw std::invalid_argument("train_encoder_regressor: empty train or dev set");
  detail::WallTimer timer;
  TrainReport report;
  Rng rng(cfg.seed);
  nn::Optimizer<T> opt(cfg.optimizer, static_cast<T>(cfg.learning_rate));
  std::vector<nn::Parameter<T>*> params = ae.params();
  for (auto* p : annr.params()) params.push_back(p);

  auto dev_eval = [&](double& mse, double& word_accuracy) {
    nn::NoGradGuard ng;
    double total = 0.0;
    std::size_t exact = 0;
    for (const auto& q : dev) {
      nn::Tensor<T> pred = annr.predict(ae.encode(q.a), ae.encode(q.b), ae.encode(q.c));
      total += static_cast<double>(nn::mse_loss(ae.encode(q.d), pred).item());
      std::size_t longest = std::max({q.a.size(), q.b.size(), q.c.size()});
      auto decoded = ae.decode_greedy(pred, ae.decode_budget(longest));
      if (!decoded.truncated && decoded.word == q.d) ++exact;
    }
    mse = total / static_cast<double>(dev.size());
    word_accuracy = static_cast<double>(exact) / static_cast<double>(dev.size());
  };

  detail::EarlyStopper stopper{cfg.patience, true};
  std::map<std::string, std::vector<T>> best;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double lambda = lambda_schedule(epoch - 1);
    double train_loss = 0.0;
    std::size_t batches = 0;
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::map<Word, nn::Tensor<T>> enc;
      std::vector<nn::Tensor<T>> preds, targets;
      std::vector<const Word*> golds;
      for (std::size_t i : batch) {
        for (const auto& e : augment_for_regression(train[i])) {
          for (const Word* w : {&e.a, &e.b, &e.c, &e.gold})
            if (!enc.count(*w)) enc.emplace(*w, ae.encode(*w));
          preds.push_back(annr.predict(enc.at(e.a), enc.at(e.b), enc.at(e.c)));
          targets.push_back(enc.at(e.gold));
          golds.push_back(&e.gold);
        }
      }
      // the decode term runs the decoder on the prediction, teacher-forced
      // toward the gold word, so exact generation is optimized end to end
      std::vector<nn::Tensor<T>> decode;
      decode.reserve(preds.size());
      for (std::size_t j = 0; j < preds.size(); ++j)
        decode.push_back(
            nn::ce_loss(ae.decode_teacher(preds[j], *golds[j]), ae.teacher_targets(*golds[j])));
      nn::Tensor<T> regression =
          nn::annr_loss(nn::stack_rows(targets), nn::stack_rows(preds),
                        rng.derangement_preferring_permutation(preds.size()));
      nn::Tensor<T> generation =
          nn::scale(nn::add_n(decode), T{1} / static_cast<T>(decode.size()));
      // the ramp starts regression-heavy and hands the weight to the decode
      // term once the embedding space is shaped
      nn::Tensor<T> loss = nn::add(nn::scale(regression, static_cast<T>(1.0 - lambda)),
                                   nn::scale(generation, static_cast<T>(lambda)));
      loss.backward();
      if (cfg.clip_norm > 0) nn::clip_global_norm(params, static_cast<T>(cfg.clip_norm));
      opt.step(params);
      train_loss += static_cast<double>(loss.item());
      ++batches;
    }
    train_loss /= static_cast<double>(batches);

    double dev_mse = 0.0, dev_accuracy = 0.0;
    dev_eval(dev_mse, dev_accuracy);
    report.epochs.push_back({epoch, 1, train_loss, dev_mse, dev_accuracy, lambda});

    if (!std::isfinite(train_loss)) {
      report.stopping_reason = "divergence";
      break;
    }
    if (stopper.observe(dev_accuracy, epoch)) best = snapshot_params(params);
    if (stopper.exhausted()) {
      report.stopping_reason = "early_stopping";
      break;
    }
  }
  if (report.stopping_reason.empty()) report.stopping_reason = "max_epochs";
  if (!best.empty()) restore_params(params, best);
  report.best_epoch = stopper.best_epoch;
  report.best_dev_metric = stopper.best;

  double dev_mse = 0.0, dev_accuracy = 0.0;
  dev_eval(dev_mse, dev_accuracy);
  report.final_metrics["dev_mse"] = dev_mse;
  report.final_metrics["dev_word_accuracy"] = dev_accuracy;
  report.wall_seconds = timer.seconds();
  return report;
}

}  // namespace mann
