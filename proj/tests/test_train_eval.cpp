// Metrics against hand-counted confusion tables, training loops on small
// synthetic data (determinism, early stopping, phase freezing), and the
// benchmark harness including failing and timing-out solvers.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mann/eval/benchmark.hpp"
#include "mann/eval/metrics.hpp"
#include "mann/train/training.hpp"
#include "support/toy.hpp"

using namespace mann;
using T = double;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Word> toy_words(std::size_t stem_count, std::uint64_t seed) {
  std::vector<Word> out;
  for (const auto& t : toy::triples(stem_count, seed)) {
    out.push_back(t.lemma);
    out.push_back(t.form);
  }
  std::set<Word> distinct(out.begin(), out.end());
  return {distinct.begin(), distinct.end()};
}

CorpusSplit toy_split(std::size_t stem_count, const SplitSizes& sizes) {
  auto triples = toy::triples(stem_count, 7);
  auto corpus = dedup_analogies(build_analogy_corpus(triples));
  return split_corpus(corpus, words_of(triples), 3, sizes);
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("classification metrics from a hand-counted confusion table") {
  ClassificationMetrics m =
      classification_metrics<double>({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0});
  CHECK(m.tp == 1);
  CHECK(m.fn == 1);
  CHECK(m.fp == 1);
  CHECK(m.tn == 1);
  CHECK(m.accuracy == 0.5);
  CHECK(m.tpr == 0.5);
  CHECK(m.tnr == 0.5);
  CHECK(m.balanced_accuracy_defined);
  CHECK(m.balanced_accuracy == 0.5);
  CHECK(m.f1_defined);
  CHECK(m.f1 == 0.5);

  // scores at exactly the threshold count as positive
  ClassificationMetrics edge = classification_metrics<double>({0.5}, {1});
  CHECK(edge.tp == 1);

  // single-class label sets leave the class-dependent metrics undefined
  ClassificationMetrics pos_only = classification_metrics<double>({0.9, 0.2}, {1, 1});
  CHECK(pos_only.tpr_defined);
  CHECK_FALSE(pos_only.tnr_defined);
  CHECK_FALSE(pos_only.balanced_accuracy_defined);
  ClassificationMetrics neg_only = classification_metrics<double>({0.1, 0.2}, {0, 0});
  CHECK_FALSE(neg_only.tpr_defined);
  CHECK_FALSE(neg_only.balanced_accuracy_defined);
  CHECK_FALSE(neg_only.f1_defined);  // no true or predicted positives anywhere

  // unbalanced classes weight the balanced accuracy by class size
  ClassificationMetrics w =
      classification_metrics<double>({0.9, 0.9, 0.9, 0.1}, {1, 1, 0, 0});
  // tp=2, fp=1, tn=1: tpr=1, tnr=0.5, weighted (1*2 + 0.5*2) / 4
  CHECK_THAT(w.balanced_accuracy, WithinAbs(0.75, 1e-12));

  CHECK_THROWS_AS(classification_metrics<double>({0.5}, {1, 0}), std::invalid_argument);
}

TEST_CASE("hit rate counts gold in the top k and treats timeouts as misses") {
  Word gold = utf8_to_word("gold");
  Word other = utf8_to_word("other");
  SolverRanking deep;  // gold at rank 2
  deep.candidates = {other, gold};
  SolverRanking timed;  // gold on top but timed out
  timed.candidates = {gold};
  timed.timed_out = true;
  SolverRanking top;  // gold at rank 1
  top.candidates = {gold};
  SolverRanking empty;

  std::map<int, double> rates =
      hit_at_k({deep, timed, top, empty}, {gold, gold, gold, gold});
  CHECK(rates.at(1) == 0.25);
  CHECK(rates.at(3) == 0.5);
  CHECK(rates.at(5) == 0.5);
  CHECK(rates.at(10) == 0.5);
  double prev = 0.0;
  for (int k : hit_at_k_values()) {
    CHECK(rates.at(k) >= prev);
    prev = rates.at(k);
  }

  std::map<int, double> custom = hit_at_k({deep}, {gold}, {2});
  CHECK(custom.at(2) == 1.0);
  CHECK_THROWS_AS(hit_at_k({deep}, {gold, gold}), std::invalid_argument);
  CHECK(hit_at_k({}, {}).at(1) == 0.0);
}

TEST_CASE("generation metrics align characters positionally") {
  // cats vs cat: 3 positional matches over the longer length 4
  GenerationMetrics m = generation_metrics({utf8_to_word("cats"), utf8_to_word("dog")},
                                           {utf8_to_word("cat"), utf8_to_word("dog")});
  CHECK(m.word_accuracy == 0.5);
  CHECK_THAT(m.char_accuracy, WithinAbs((0.75 + 1.0) / 2.0, 1e-12));
  CHECK(m.truncation_rate == 0.0);

  GenerationMetrics empty_pair = generation_metrics({Word{}}, {Word{}});
  CHECK(empty_pair.word_accuracy == 1.0);
  CHECK(empty_pair.char_accuracy == 1.0);

  GenerationMetrics trunc = generation_metrics({utf8_to_word("a"), utf8_to_word("b")},
                                               {utf8_to_word("a"), utf8_to_word("b")},
                                               {true, false});
  CHECK(trunc.truncation_rate == 0.5);

  CHECK_THROWS_AS(generation_metrics({Word{}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(generation_metrics({Word{}}, {Word{}}, {true, false}),
                  std::invalid_argument);
}

TEST_CASE("mean and population standard deviation") {
  MeanStd ms = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == 2.5);
  CHECK_THAT(ms.std, WithinAbs(std::sqrt(1.25), 1e-12));
  CHECK(mean_std({}).mean == 0.0);
  CHECK(mean_std({7.0}).std == 0.0);
}

TEST_CASE("loss mix schedule ramps over five epochs and stays clamped") {
  CHECK(lambda_schedule(0) == 0.01);
  CHECK_THAT(lambda_schedule(1), WithinAbs(0.2, 1e-12));
  CHECK_THAT(lambda_schedule(3), WithinAbs(0.6, 1e-12));
  CHECK(lambda_schedule(5) == 0.99);
  CHECK(lambda_schedule(100) == 0.99);
}

TEST_CASE("train config json round trip and partial merge") {
  TrainConfig c = TrainConfig::autoencoder_defaults();
  c.seed = 9;
  nlohmann::json j = to_json(c);
  TrainConfig back;
  merge_from_json(back, j);
  CHECK(back.optimizer == c.optimizer);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.batch_size == c.batch_size);
  CHECK(back.max_epochs == c.max_epochs);
  CHECK(back.clip_norm == c.clip_norm);
  CHECK(back.seed == 9);

  TrainConfig partial = TrainConfig::classifier_defaults();
  merge_from_json(partial, nlohmann::json{{"learning_rate", 5.0}});
  CHECK(partial.learning_rate == 5.0);
  CHECK(partial.batch_size == TrainConfig::classifier_defaults().batch_size);
  CHECK_THROWS_AS(merge_from_json(partial, nlohmann::json{{"optimizer", "sgd"}}),
                  std::invalid_argument);
}

TEST_CASE("train report json round trip and equivalence up to wall time") {
  TrainReport r;
  r.epochs.push_back({1, 1, 0.5, 0.4, 0.6, 0.01});
  r.epochs.push_back({2, 2, 0.3, 0.2, 0.8, 0.2});
  r.stopping_reason = "early_stopping";
  r.best_epoch = 2;
  r.best_dev_metric = 0.8;
  r.wall_seconds = 12.5;
  r.final_metrics["dev_loss"] = 0.2;
  r.frozen_checksum_before = 111;
  r.frozen_checksum_after = 111;

  TrainReport back = train_report_from_json(to_json(r));
  CHECK(reports_equivalent(r, back));
  CHECK(back.wall_seconds == 12.5);

  TrainReport other = back;
  other.wall_seconds = 99.0;
  CHECK(reports_equivalent(r, other));
  other.epochs[0].train_loss = 0.51;
  CHECK_FALSE(reports_equivalent(r, other));
}

TEST_CASE("parameter snapshots, checksums, and early stopping bookkeeping") {
  Rng rng(5);
  auto annr = Annr<T>::init(AnnrConfig{4, 3}, rng);
  auto params = annr.params();
  std::uint64_t before = params_checksum(params);
  auto snap = snapshot_params(params);

  params[0]->value.values()[0] += 1.0;
  CHECK(params_checksum(params) != before);
  restore_params(params, snap);
  CHECK(params_checksum(params) == before);

  std::map<std::string, std::vector<T>> missing;
  CHECK_THROWS_WITH(restore_params(params, missing),
                    Catch::Matchers::ContainsSubstring("missing"));

  detail::EarlyStopper stopper{2, true};
  CHECK(stopper.observe(1.0, 1));
  CHECK(stopper.observe(2.0, 2));
  CHECK_FALSE(stopper.observe(1.5, 3));
  CHECK_FALSE(stopper.exhausted());
  CHECK_FALSE(stopper.observe(1.6, 4));
  CHECK(stopper.exhausted());
  CHECK(stopper.best == 2.0);
  CHECK(stopper.best_epoch == 2);

  detail::EarlyStopper lower{1, false};
  CHECK(lower.observe(5.0, 1));
  CHECK(lower.observe(4.0, 2));
  CHECK_FALSE(lower.observe(4.0, 3));
  CHECK(lower.exhausted());
}

TEST_CASE("shuffled batches cover every index exactly once") {
  Rng rng(6);
  auto batches = detail::shuffled_batches(10, 3, rng);
  REQUIRE(batches.size() == 4);
  CHECK(batches[0].size() == 3);
  CHECK(batches[3].size() == 1);
  std::set<std::size_t> seen;
  for (const auto& b : batches) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 10);

  Rng r1(7), r2(7);
  CHECK(detail::shuffled_batches(20, 6, r1) == detail::shuffled_batches(20, 6, r2));
}

TEST_CASE("autoencoder pretraining learns, stops, and reproduces") {
  std::vector<Word> words = toy_words(12, 3);  // 72 distinct words
  std::vector<Word> train(words.begin(), words.begin() + 40);
  std::vector<Word> dev(words.begin() + 40, words.begin() + 50);
  Vocabulary vocab = Vocabulary::from_words(words);

  TrainConfig cfg = TrainConfig::autoencoder_defaults();
  cfg.max_epochs = 6;
  cfg.batch_size = 16;
  cfg.seed = 1;

  Rng rng(2);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{8}, vocab, rng);
  TrainReport report = pretrain_autoencoder(ae, train, dev, cfg);

  REQUIRE_FALSE(report.epochs.empty());
  CHECK(report.epochs.size() <= 6);
  CHECK(report.epochs.front().train_loss > report.epochs.back().train_loss);
  CHECK(report.stopping_reason != "divergence");
  CHECK(report.best_epoch >= 1);
  CHECK(report.final_metrics.count("dev_loss"));
  CHECK(report.final_metrics.count("dev_word_accuracy"));
  CHECK(report.wall_seconds > 0.0);

  // identical config and seeds reproduce the run record exactly
  Rng rng2(2);
  auto ae2 = Autoencoder<T>::init(AutoencoderConfig{8}, vocab, rng2);
  TrainReport report2 = pretrain_autoencoder(ae2, train, dev, cfg);
  CHECK(reports_equivalent(report, report2));
  CHECK(params_checksum(ae.params()) == params_checksum(ae2.params()));

  CHECK_THROWS_AS(pretrain_autoencoder(ae, {}, dev, cfg), std::invalid_argument);
}

TEST_CASE("autoencoder pretraining early-stops on a flat dev metric") {
  std::vector<Word> words = toy_words(10, 4);
  std::vector<Word> train(words.begin(), words.begin() + 20);
  std::vector<Word> dev(words.begin() + 20, words.begin() + 28);
  Vocabulary vocab = Vocabulary::from_words(words);

  TrainConfig cfg = TrainConfig::autoencoder_defaults();
  cfg.learning_rate = 1e-9;  // effectively frozen, so accuracy never moves
  cfg.max_epochs = 50;
  cfg.patience = 1;
  cfg.batch_size = 16;

  Rng rng(3);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{6}, vocab, rng);
  TrainReport report = pretrain_autoencoder(ae, train, dev, cfg);
  CHECK(report.stopping_reason == "early_stopping");
  CHECK(report.epochs.size() == 2);  // first observation, then one stale epoch
}

TEST_CASE("autoencoder overfits a small vocabulary to perfect round trips") {
  std::vector<Word> words = toy_words(9, 5);
  words.resize(50);
  Vocabulary vocab = Vocabulary::from_words(words);

  TrainConfig cfg = TrainConfig::autoencoder_defaults();
  cfg.max_epochs = 100;
  cfg.patience = 12;
  cfg.batch_size = 16;
  cfg.seed = 4;

  // memorization on purpose: train and dev are the same fifty words
  Rng rng(4);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{16}, vocab, rng);
  TrainReport report = pretrain_autoencoder(ae, words, words, cfg);
  CHECK(report.best_dev_metric == 1.0);

  nn::NoGradGuard ng;
  std::size_t exact = 0;
  for (const Word& w : words) {
    auto d = ae.round_trip(w);
    if (!d.truncated && d.word == w) ++exact;
  }
  CHECK(exact == words.size());
}

TEST_CASE("classifier training runs deterministically on a toy corpus") {
  CorpusSplit split = toy_split(12, SplitSizes{8, 8, 32});
  TrainConfig cfg = TrainConfig::classifier_defaults();
  cfg.max_epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 4;

  CnnEmbedderConfig ecfg{8, {2, 3}, 4, 4};
  Vocabulary vocab = Vocabulary::from_words(split.word_pool);

  Rng rng(5);
  auto embedder = CnnEmbedder<T>::init(ecfg, vocab, rng);
  auto annc = Annc<T>::init(AnncConfig{ecfg.output_dim(), 8, 4}, rng);
  TrainReport report = train_classifier(embedder, annc, split.train, split.dev, cfg);

  REQUIRE(report.epochs.size() == 2);
  for (const auto& e : report.epochs) {
    CHECK(e.phase == 1);
    CHECK(e.dev_metric >= 0.0);
    CHECK(e.dev_metric <= 1.0);
  }
  CHECK(report.stopping_reason == "max_epochs");
  CHECK(report.final_metrics.count("dev_accuracy"));

  Rng rng2(5);
  auto embedder2 = CnnEmbedder<T>::init(ecfg, vocab, rng2);
  auto annc2 = Annc<T>::init(AnncConfig{ecfg.output_dim(), 8, 4}, rng2);
  TrainReport report2 = train_classifier(embedder2, annc2, split.train, split.dev, cfg);
  CHECK(reports_equivalent(report, report2));
  CHECK(params_checksum(embedder.params()) == params_checksum(embedder2.params()));
  CHECK(params_checksum(annc.params()) == params_checksum(annc2.params()));

  CHECK_THROWS_AS(train_classifier(embedder, annc, split.train, {}, cfg),
                  std::invalid_argument);
}

TEST_CASE("embedder and regressor train in two phases with a real freeze") {
  CorpusSplit split = toy_split(12, SplitSizes{6, 6, 24});
  TrainConfig cfg = TrainConfig::embedder_regressor_defaults();
  cfg.max_epochs = 3;
  cfg.phase1_patience = 0;  // one frozen epoch, then joint training
  cfg.batch_size = 8;
  cfg.seed = 6;

  CnnEmbedderConfig ecfg{8, {2, 3}, 4, 4};
  Vocabulary vocab = Vocabulary::from_words(split.word_pool);
  Rng rng(7);
  auto embedder = CnnEmbedder<T>::init(ecfg, vocab, rng);
  auto annr = Annr<T>::init(AnnrConfig{ecfg.output_dim(), 8}, rng);

  std::uint64_t embedder_at_start = params_checksum(embedder.params());
  TrainReport report = train_embedder_regressor(embedder, annr, split.train, split.dev, cfg);

  REQUIRE(report.epochs.size() == 3);
  CHECK(report.epochs[0].phase == 1);
  CHECK(report.epochs[1].phase == 2);
  CHECK(report.epochs[2].phase == 2);
  // the embedder holds still through phase 1
  CHECK(report.frozen_checksum_before == embedder_at_start);
  CHECK(report.frozen_checksum_before == report.frozen_checksum_after);
  CHECK(report.final_metrics.count("dev_mse"));
  // dev loss doubles as the metric: recorded identically
  for (const auto& e : report.epochs) CHECK(e.dev_loss == e.dev_metric);
}

TEST_CASE("encoder and regressor train against the scheduled loss mix") {
  CorpusSplit split = toy_split(10, SplitSizes{6, 6, 16});
  TrainConfig cfg = TrainConfig::encoder_regressor_defaults();
  cfg.max_epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 8;

  Vocabulary vocab = Vocabulary::from_words(split.word_pool);
  Rng rng(9);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{6}, vocab, rng);
  auto annr = Annr<T>::init(AnnrConfig{ae.cfg.embed_dim(), 8}, rng);

  TrainReport report = train_encoder_regressor(ae, annr, split.train, split.dev, cfg);
  REQUIRE(report.epochs.size() == 2);
  CHECK(report.epochs[0].lambda == lambda_schedule(0));
  CHECK(report.epochs[1].lambda == lambda_schedule(1));
  CHECK(report.final_metrics.count("dev_mse"));
  CHECK(report.final_metrics.count("dev_word_accuracy"));
}

namespace {

// equations where the gold answer is simply c, so a copy solver always hits
std::vector<AnalogyQuadruple> copy_equations(int n) {
  std::vector<AnalogyQuadruple> out;
  for (int i = 0; i < n; ++i) {
    Word w = utf8_to_word("w" + std::to_string(i));
    out.push_back({utf8_to_word("m"), utf8_to_word("m"), w, w, "tag"});
  }
  return out;
}

const SolverSpec kCopySolver{"copy", [](std::uint64_t) {
                               return [](const AnalogyEquation& eq, const Deadline&) {
                                 SolverRanking r;
                                 r.candidates.push_back(eq.c);
                                 return r;
                               };
                             }};

const SolverSpec kThrowingSolver{"throwing", [](std::uint64_t) {
                                   return [](const AnalogyEquation&,
                                             const Deadline&) -> SolverRanking {
                                     throw std::runtime_error("boom");
                                   };
                                 }};

const SolverSpec kStallingSolver{"stalling", [](std::uint64_t) {
                                   return [](const AnalogyEquation&, const Deadline& deadline) {
                                     while (!deadline.expired()) {
                                     }
                                     return SolverRanking{};
                                   };
                                 }};

}  // namespace

TEST_CASE("benchmark tolerates throwing and stalling solvers") {
  auto equations = copy_equations(4);
  BenchmarkResult result = run_benchmark({kCopySolver, kThrowingSolver, kStallingSolver},
                                         equations, {1, 2}, 0.005);

  REQUIRE(result.runs.size() == 6);
  REQUIRE(result.summaries.size() == 3);

  const SolverSummary& copy = result.summaries[0];
  CHECK(copy.solver_id == "copy");
  CHECK(copy.hits.at(1).mean == 1.0);
  CHECK(copy.hits.at(1).std == 0.0);
  CHECK(copy.failures == 0);

  const SolverSummary& throwing = result.summaries[1];
  CHECK(throwing.failures == 8);  // every equation, both seeds
  CHECK(throwing.hits.at(10).mean == 0.0);

  const SolverSummary& stalling = result.summaries[2];
  CHECK(stalling.timeouts == 8);
  CHECK(stalling.hits.at(10).mean == 0.0);

  for (const SolverRun& run : result.runs) {
    double prev = 0.0;
    for (int k : hit_at_k_values()) {
      CHECK(run.hits.at(k) >= prev);
      prev = run.hits.at(k);
    }
    for (const EquationTrace& t : run.traces) {
      if (run.solver_id == "throwing") {
        CHECK(t.failed);
        CHECK_FALSE(t.timed_out);
        CHECK(t.top.empty());
      }
      if (run.solver_id == "stalling") CHECK(t.timed_out);
    }
  }
}

TEST_CASE("trace files carry one fixed-width row per equation") {
  auto equations = copy_equations(3);
  SolverRun run = run_solver_once(kCopySolver, 1, equations, 1.0);
  std::ostringstream out;
  write_trace_tsv(out, run);

  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "A\tB\tC\tgold\trank1\trank2\trank3\trank4\trank5\trank6\trank7\trank8\trank9\trank10\t"
        "timed_out\telapsed_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 15);
    auto first_tab = line.find('\t');
    CHECK(line.substr(0, first_tab) == "m");
  }
  CHECK(rows == 3);
}

TEST_CASE("benchmark bundle holds metrics, traces, and the summary table") {
  auto dir = fresh_dir("mann_test_bundle");
  auto equations = copy_equations(3);
  BenchmarkResult result = run_benchmark({kCopySolver}, equations, {1, 2}, 1.0);
  write_benchmark_bundle(dir, result, {1, 2}, 1.0, equations.size());

  std::ifstream metrics(dir / "metrics.json");
  REQUIRE(metrics.good());
  nlohmann::json j = nlohmann::json::parse(metrics);
  CHECK(j.at("kind") == "benchmark_metrics");
  CHECK(j.at("num_equations") == 3);
  CHECK(j.at("seeds") == nlohmann::json({1, 2}));
  REQUIRE(j.at("solvers").size() == 1);
  CHECK(j.at("solvers")[0].at("solver") == "copy");
  CHECK(j.at("solvers")[0].at("hits").at("hit@1").at("mean") == 1.0);
  REQUIRE(j.at("runs").size() == 2);
  for (const auto& run : j.at("runs")) {
    CHECK(std::filesystem::exists(dir / run.at("trace_file").get<std::string>()));
  }

  std::ifstream table(dir / "table.txt");
  std::string header;
  REQUIRE(std::getline(table, header));
  CHECK(header == "solver\thit@1\thit@3\thit@5\thit@10\tfailures\ttimeouts");
  std::string row;
  REQUIRE(std::getline(table, row));
  CHECK(row.rfind("copy\t1.0000", 0) == 0);

  std::filesystem::remove_all(dir);
}
