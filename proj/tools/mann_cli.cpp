// Command-line front end: prepare analogy data, train models, solve single
// equations, run solver benchmarks, and validate report bundles. One JSON
// config file can preload any flag; explicit flags win. Every command writes
// its artifacts under one run directory, by default named by the hash of its
// effective configuration.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mann/axioms.hpp"
#include "mann/data.hpp"
#include "mann/eval/benchmark.hpp"
#include "mann/eval/metrics.hpp"
#include "mann/models/model_io.hpp"
#include "mann/solve/kolmo.hpp"
#include "mann/solve/neural.hpp"
#include "mann/solve/ranking.hpp"
#include "mann/solve/symbolic.hpp"
#include "mann/solve/vector.hpp"
#include "mann/train/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Real = double;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path data_root() {
  const char* env = std::getenv("MORPHO_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// default run directory: <root>/<command>-<hash of effective config>
fs::path run_dir(const std::string& out_flag, const std::string& command, const json& config) {
  if (!out_flag.empty()) return fs::path(out_flag);
  return data_root() / (command + "-" + hex16(mann::fnv1a64(config.dump())));
}

// --- quadruple and word list files ---

std::string quadruples_tsv(const std::vector<mann::AnalogyQuadruple>& qs) {
  std::string out;
  for (const auto& q : qs) {
    out += mann::serialize_quadruple(q);
    out += '\t';
    out += q.feature;
    out += '\n';
  }
  return out;
}

std::vector<mann::AnalogyQuadruple> parse_quadruples_tsv(const fs::path& file) {
  std::vector<mann::AnalogyQuadruple> out;
  std::istringstream in(read_text(file));
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 5)
      throw std::runtime_error(file.string() + ":" + std::to_string(line_number) +
                               ": expected 5 tab-separated fields");
    out.push_back({mann::utf8_to_word(fields[0]), mann::utf8_to_word(fields[1]),
                   mann::utf8_to_word(fields[2]), mann::utf8_to_word(fields[3]), fields[4]});
  }
  return out;
}

std::string words_text(const std::vector<mann::Word>& words) {
  std::string out;
  for (const auto& w : words) {
    out += mann::word_to_utf8(w);
    out += '\n';
  }
  return out;
}

std::vector<mann::Word> parse_words(const fs::path& file) {
  std::vector<mann::Word> out;
  std::istringstream in(read_text(file));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(mann::utf8_to_word(line));
  return out;
}

// --- config file preloading ---

// Flat JSON object whose keys mirror long flag names (without the leading
// dashes). Values are applied as flag defaults before parsing, so explicit
// flags override them. Keys no command knows are rejected.
struct ConfigFile {
  json values = json::object();
  std::set<std::string> known;

  void load(const fs::path& p) {
    values = json::parse(read_text(p));
    if (!values.is_object()) throw UsageError("config file must hold a JSON object");
  }

  template <typename V>
  void apply(const std::string& key, V& var) {
    known.insert(key);
    if (values.contains(key)) values.at(key).get_to(var);
  }

  void check_unknown() const {
    for (const auto& [key, value] : values.items())
      if (!known.count(key)) throw UsageError("unknown config key: " + key);
  }
};

std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  return {};
}

// --- prepare ---

struct PrepareArgs {
  std::string input, out, column_order = "lemma-features-form";
  bool strict = false;
  std::uint64_t seed = 0;
  mann::SplitSizes sizes;
  mann::WordDatasetSizes word_sizes;
};

int cmd_prepare(const PrepareArgs& a) {
  if (a.input.empty()) throw UsageError("prepare needs --input");
  if (a.column_order != "lemma-features-form" && a.column_order != "lemma-form-features")
    throw UsageError("unknown column order: " + a.column_order);
  mann::ColumnOrder order = a.column_order == "lemma-features-form"
                                ? mann::ColumnOrder::kLemmaFeaturesForm
                                : mann::ColumnOrder::kLemmaFormFeatures;

  json config{{"command", "prepare"},
              {"input", a.input},
              {"column_order", a.column_order},
              {"strict", a.strict},
              {"seed", a.seed},
              {"dev", a.sizes.dev},
              {"test", a.sizes.test},
              {"train_max", a.sizes.train_max},
              {"word_dev", a.word_sizes.dev},
              {"word_test", a.word_sizes.test},
              {"word_train_max", a.word_sizes.train_max}};
  fs::path out = run_dir(a.out, "prepare", config);

  std::string source = read_text(a.input);
  std::istringstream in(source);
  mann::ParseResult parsed = mann::parse_inflection_stream(in, order, a.strict);
  for (const auto& w : parsed.warnings)
    std::cerr << a.input << ":" << w.line_number << ": " << w.message << "\n";
  if (parsed.triples.empty()) throw std::runtime_error("no usable triples in " + a.input);

  std::vector<mann::AnalogyQuadruple> corpus =
      mann::dedup_analogies(mann::build_analogy_corpus(parsed.triples));
  std::vector<mann::Word> source_words = mann::words_of(parsed.triples);
  mann::CorpusSplit split = mann::split_corpus(corpus, source_words, a.seed, a.sizes);
  mann::WordDataset words = mann::build_word_dataset(source_words, a.seed, a.word_sizes);

  fs::create_directories(out);
  json checksums;
  auto emit = [&](const char* name, const std::string& content) {
    checksums[name] = hex16(mann::fnv1a64(content));
    write_text(out / name, content);
  };
  emit("train.tsv", quadruples_tsv(split.train));
  emit("dev.tsv", quadruples_tsv(split.dev));
  emit("test.tsv", quadruples_tsv(split.test));
  emit("words.txt", words_text(split.word_pool));
  emit("word_train.txt", words_text(words.train));
  emit("word_dev.txt", words_text(words.dev));
  emit("word_test.txt", words_text(words.test));

  json manifest{{"kind", "dataset_manifest"},
                {"config", config},
                {"source_checksum", hex16(mann::fnv1a64(source))},
                {"counts",
                 {{"triples", parsed.triples.size()},
                  {"warnings", parsed.warnings.size()},
                  {"corpus", corpus.size()},
                  {"train", split.train.size()},
                  {"dev", split.dev.size()},
                  {"test", split.test.size()},
                  {"word_pool", split.word_pool.size()},
                  {"word_train", words.train.size()},
                  {"word_dev", words.dev.size()},
                  {"word_test", words.test.size()}}},
                {"vocab", mann::vocab_to_json(words.vocab)},
                {"checksums", checksums}};
  write_text(out / "dataset.json", manifest.dump(2) + "\n");

  std::cout << "prepared " << out.string() << "\n"
            << "  corpus " << corpus.size() << " | train " << split.train.size() << " dev "
            << split.dev.size() << " test " << split.test.size() << " | word pool "
            << split.word_pool.size() << "\n";
  return 0;
}

// --- train ---

struct TrainArgs {
  std::string model, data, out, init_from;
  std::uint64_t seed = 0;
  std::string optimizer;  // empty keeps the per-model default
  double lr = -1;         // negative keeps the default
  long batch = -1;
  int epochs = -1, patience = -1, phase1_patience = -1;
  double clip = -1;
  std::uint64_t dev_seed = 1;
  // model dimensions
  int char_dim = 64, filters = 16, min_length = 6;
  std::vector<int> windows = {2, 3, 4, 5, 6};
  int stage1 = 128, stage2 = 64;
  int annr_hidden = 0;  // 0 means the embedding width
  int ae_hidden = 64, max_decode = 30, decode_slack = 5;
  int prefilter = 0;
};

mann::Vocabulary manifest_vocab(const fs::path& data) {
  json manifest = json::parse(read_text(data / "dataset.json"));
  return mann::vocab_from_json(manifest.at("vocab"));
}

mann::TrainConfig resolve_train_config(const TrainArgs& a, mann::TrainConfig cfg) {
  if (!a.optimizer.empty()) cfg.optimizer = mann::optimizer_from_name(a.optimizer);
  if (a.lr >= 0) cfg.learning_rate = a.lr;
  if (a.batch >= 0) cfg.batch_size = static_cast<std::size_t>(a.batch);
  if (a.epochs >= 0) cfg.max_epochs = a.epochs;
  if (a.patience >= 0) cfg.patience = a.patience;
  if (a.phase1_patience >= 0) cfg.phase1_patience = a.phase1_patience;
  if (a.clip >= 0) cfg.clip_norm = a.clip;
  cfg.seed = a.seed;
  cfg.dev_seed = a.dev_seed;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  static const std::set<std::string> kModels{"ae", "annc", "cnn-annr", "ae-annr"};
  if (!kModels.count(a.model)) throw UsageError("unknown model: " + a.model);
  if (a.data.empty()) throw UsageError("train needs --data");
  if ((a.model == "cnn-annr" || a.model == "ae-annr") && a.init_from.empty())
    throw UsageError(a.model == "cnn-annr"
                         ? "cnn-annr starts from a classifier run's embedder; pass "
                           "--init-from <annc run dir>"
                         : "ae-annr starts from a pretrained autoencoder; pass "
                           "--init-from <ae run dir>");

  mann::TrainConfig base = a.model == "ae"       ? mann::TrainConfig::autoencoder_defaults()
                           : a.model == "annc"   ? mann::TrainConfig::classifier_defaults()
                           : a.model == "cnn-annr"
                               ? mann::TrainConfig::embedder_regressor_defaults()
                               : mann::TrainConfig::encoder_regressor_defaults();
  mann::TrainConfig tcfg = resolve_train_config(a, base);

  json config{{"command", "train"},
              {"model", a.model},
              {"data", a.data},
              {"init_from", a.init_from},
              {"train", mann::to_json(tcfg)},
              {"dims",
               {{"char_dim", a.char_dim},
                {"filters", a.filters},
                {"min_length", a.min_length},
                {"windows", a.windows},
                {"stage1", a.stage1},
                {"stage2", a.stage2},
                {"annr_hidden", a.annr_hidden},
                {"ae_hidden", a.ae_hidden},
                {"max_decode", a.max_decode},
                {"decode_slack", a.decode_slack}}}};
  fs::path out = run_dir(a.out, "train-" + a.model, config);
  fs::path data(a.data);

  mann::Rng init_rng(a.seed);
  mann::TrainReport report;
  json checkpoints;

  if (a.model == "ae") {
    std::vector<mann::Word> train = parse_words(data / "word_train.txt");
    std::vector<mann::Word> dev = parse_words(data / "word_dev.txt");
    mann::AutoencoderConfig acfg{a.ae_hidden, a.max_decode, a.decode_slack};
    auto ae = mann::Autoencoder<Real>::init(acfg, manifest_vocab(data), init_rng);
    report = mann::pretrain_autoencoder(ae, train, dev, tcfg);
    fs::create_directories(out);
    mann::save_autoencoder((out / "ae").string(), ae);
    checkpoints["ae"] = "ae.mann";
  } else if (a.model == "annc") {
    auto train = parse_quadruples_tsv(data / "train.tsv");
    auto dev = parse_quadruples_tsv(data / "dev.tsv");
    mann::CnnEmbedderConfig ecfg{a.char_dim, a.windows, a.filters, a.min_length};
    auto embedder = mann::CnnEmbedder<Real>::init(ecfg, manifest_vocab(data), init_rng);
    mann::AnncConfig ccfg{ecfg.output_dim(), a.stage1, a.stage2};
    auto annc = mann::Annc<Real>::init(ccfg, init_rng);
    report = mann::train_classifier(embedder, annc, train, dev, tcfg);
    fs::create_directories(out);
    mann::save_embedder((out / "embedder").string(), embedder);
    mann::save_annc((out / "classifier").string(), annc);
    checkpoints["embedder"] = "embedder.mann";
    checkpoints["classifier"] = "classifier.mann";
  } else if (a.model == "cnn-annr") {
    auto train = parse_quadruples_tsv(data / "train.tsv");
    auto dev = parse_quadruples_tsv(data / "dev.tsv");
    fs::path embedder_base = fs::path(a.init_from) / "embedder";
    if (!fs::exists(embedder_base.string() + ".mann"))
      throw std::runtime_error("missing embedder checkpoint " + embedder_base.string() +
                               ".mann (train an annc run first)");
    auto embedder = mann::load_embedder<Real>(embedder_base.string());
    mann::AnnrConfig rcfg{embedder.cfg.output_dim(),
                          a.annr_hidden > 0 ? a.annr_hidden : embedder.cfg.output_dim()};
    auto annr = mann::Annr<Real>::init(rcfg, init_rng);
    report = mann::train_embedder_regressor(embedder, annr, train, dev, tcfg);
    fs::create_directories(out);
    mann::save_embedder((out / "embedder").string(), embedder);
    mann::save_annr((out / "regressor").string(), annr);
    checkpoints["embedder"] = "embedder.mann";
    checkpoints["regressor"] = "regressor.mann";
  } else {
    auto train = parse_quadruples_tsv(data / "train.tsv");
    auto dev = parse_quadruples_tsv(data / "dev.tsv");
    fs::path ae_base = fs::path(a.init_from) / "ae";
    if (!fs::exists(ae_base.string() + ".mann"))
      throw std::runtime_error("missing autoencoder checkpoint " + ae_base.string() +
                               ".mann (train an ae run first)");
    auto ae = mann::load_autoencoder<Real>(ae_base.string());
    mann::AnnrConfig rcfg{ae.cfg.embed_dim(),
                          a.annr_hidden > 0 ? a.annr_hidden : ae.cfg.embed_dim()};
    auto annr = mann::Annr<Real>::init(rcfg, init_rng);
    report = mann::train_encoder_regressor(ae, annr, train, dev, tcfg);
    fs::create_directories(out);
    mann::save_autoencoder((out / "ae").string(), ae);
    mann::save_annr((out / "regressor").string(), annr);
    checkpoints["ae"] = "ae.mann";
    checkpoints["regressor"] = "regressor.mann";
  }

  json report_doc{{"kind", "train_run"},
                  {"config", config},
                  {"checkpoints", checkpoints},
                  {"report", mann::to_json(report)}};
  write_text(out / "report.json", report_doc.dump(2) + "\n");

  std::cout << "trained " << a.model << " -> " << out.string() << "\n"
            << "  epochs " << report.epochs.size() << " | stop " << report.stopping_reason
            << " | best epoch " << report.best_epoch << " | best dev metric "
            << report.best_dev_metric << "\n";
  for (const auto& [name, value] : report.final_metrics)
    std::cout << "  " << name << " = " << value << "\n";
  return 0;
}

// --- solver construction shared by solve and benchmark ---

struct SolverOptions {
  std::string models;  // run directory holding checkpoints
  std::string data;    // prepared data directory (candidate pool)
  int trials = 1000;
  int node_limit = 1 << 20;
  int prefilter = 0;
};

struct SolverKit {
  std::shared_ptr<mann::CnnEmbedder<Real>> embedder;
  std::shared_ptr<mann::Annc<Real>> annc;
  std::shared_ptr<mann::Annr<Real>> annr;
  std::shared_ptr<mann::Autoencoder<Real>> ae;
  std::shared_ptr<mann::Annr<Real>> ae_annr;
  std::shared_ptr<mann::EmbeddedPool<Real>> cnn_pool;
  std::shared_ptr<mann::EmbeddedPool<Real>> pool_for(const SolverOptions& o) {
    if (!cnn_pool) {
      if (o.data.empty()) throw UsageError("this solver needs --data for the candidate pool");
      std::vector<mann::Word> words = parse_words(fs::path(o.data) / "words.txt");
      cnn_pool = std::make_shared<mann::EmbeddedPool<Real>>(mann::EmbeddedPool<Real>::build(
          words, [&](const mann::Word& w) { return embedder->embed_values(w); }));
    }
    return cnn_pool;
  }
};

void require_checkpoint(const fs::path& base, const std::string& what) {
  if (!fs::exists(base.string() + ".mann"))
    throw std::runtime_error("missing " + what + " checkpoint " + base.string() + ".mann");
}

// Builds the factory for one solver id. Model and pool loading happens here,
// once; the returned factory only rebinds the per-run random seed.
std::function<mann::SolveFn(std::uint64_t)> make_solver_factory(const std::string& id,
                                                                const SolverOptions& o,
                                                                SolverKit& kit) {
  auto need_embedder = [&]() {
    if (!kit.embedder) {
      if (o.models.empty()) throw UsageError("solver " + id + " needs --models");
      fs::path base = fs::path(o.models) / "embedder";
      require_checkpoint(base, "embedder");
      kit.embedder =
          std::make_shared<mann::CnnEmbedder<Real>>(mann::load_embedder<Real>(base.string()));
    }
  };

  if (id == "alea") {
    int trials = o.trials;
    return [trials](std::uint64_t seed) -> mann::SolveFn {
      auto rng = std::make_shared<mann::Rng>(seed);
      mann::AleaConfig cfg{trials};
      return [rng, cfg](const mann::AnalogyEquation& eq, const mann::Deadline& deadline) {
        return mann::solve_alea(eq, cfg, *rng, deadline);
      };
    };
  }
  if (id == "kolmo") {
    mann::KolmoConfig cfg{o.node_limit};
    return [cfg](std::uint64_t) -> mann::SolveFn {
      return [cfg](const mann::AnalogyEquation& eq, const mann::Deadline& deadline) {
        return mann::solve_kolmo(eq, cfg, deadline);
      };
    };
  }
  if (id == "parallelogram" || id == "3cosadd" || id == "3cosmul") {
    need_embedder();
    auto embedder = kit.embedder;
    auto pool = kit.pool_for(o);
    return [id, embedder, pool](std::uint64_t) -> mann::SolveFn {
      return [id, embedder, pool](const mann::AnalogyEquation& eq,
                                  const mann::Deadline& deadline) {
        std::vector<Real> ea = embedder->embed_values(eq.a);
        std::vector<Real> eb = embedder->embed_values(eq.b);
        std::vector<Real> ec = embedder->embed_values(eq.c);
        if (id == "parallelogram") return mann::solve_parallelogram(ea, eb, ec, *pool, deadline);
        if (id == "3cosadd") return mann::solve_3cosadd(ea, eb, ec, *pool, deadline);
        return mann::solve_3cosmul(ea, eb, ec, *pool, deadline);
      };
    };
  }
  if (id == "cnn-annr") {
    need_embedder();
    if (!kit.annr) {
      fs::path base = fs::path(o.models) / "regressor";
      require_checkpoint(base, "regressor");
      kit.annr = std::make_shared<mann::Annr<Real>>(mann::load_annr<Real>(base.string()));
    }
    auto embedder = kit.embedder;
    auto annr = kit.annr;
    auto pool = kit.pool_for(o);
    return [embedder, annr, pool](std::uint64_t) -> mann::SolveFn {
      return [embedder, annr, pool](const mann::AnalogyEquation& eq,
                                    const mann::Deadline& deadline) {
        return mann::solve_annr_retrieval(
            eq, *annr, [&](const mann::Word& w) { return embedder->embed_values(w); }, *pool,
            deadline);
      };
    };
  }
  if (id == "cnn-annc") {
    need_embedder();
    if (!kit.annc) {
      fs::path base = fs::path(o.models) / "classifier";
      require_checkpoint(base, "classifier");
      kit.annc = std::make_shared<mann::Annc<Real>>(mann::load_annc<Real>(base.string()));
    }
    auto embedder = kit.embedder;
    auto annc = kit.annc;
    auto pool = kit.pool_for(o);
    int prefilter = o.prefilter;
    return [embedder, annc, pool, prefilter](std::uint64_t) -> mann::SolveFn {
      return [embedder, annc, pool, prefilter](const mann::AnalogyEquation& eq,
                                               const mann::Deadline& deadline) {
        return mann::solve_annc_retrieval(eq, *embedder, *annc, *pool, prefilter, deadline);
      };
    };
  }
  if (id == "ae-annr") {
    if (!kit.ae) {
      if (o.models.empty()) throw UsageError("solver ae-annr needs --models");
      fs::path base = fs::path(o.models) / "ae";
      require_checkpoint(base, "autoencoder");
      kit.ae = std::make_shared<mann::Autoencoder<Real>>(mann::load_autoencoder<Real>(base.string()));
      fs::path rbase = fs::path(o.models) / "regressor";
      require_checkpoint(rbase, "regressor");
      kit.ae_annr = std::make_shared<mann::Annr<Real>>(mann::load_annr<Real>(rbase.string()));
    }
    auto ae = kit.ae;
    auto annr = kit.ae_annr;
    return [ae, annr](std::uint64_t) -> mann::SolveFn {
      return [ae, annr](const mann::AnalogyEquation& eq, const mann::Deadline& deadline) {
        return mann::solve_ae_generation(eq, *ae, *annr, deadline);
      };
    };
  }
  throw UsageError("unknown solver: " + id);
}

// --- solve ---

struct SolveArgs {
  std::string solver, a, b, c;
  SolverOptions options;
  std::uint64_t seed = 0;
  int topk = 10;
  double timeout = -1;  // negative: no limit
  bool as_json = false;
};

int cmd_solve(const SolveArgs& a) {
  if (a.solver.empty()) throw UsageError("solve needs --solver");
  SolverKit kit;
  mann::SolveFn solve = make_solver_factory(a.solver, a.options, kit)(a.seed);
  mann::AnalogyEquation eq{mann::utf8_to_word(a.a), mann::utf8_to_word(a.b),
                           mann::utf8_to_word(a.c)};

  mann::SolverRanking ranking;
  if (a.timeout < 0) {
    auto start = std::chrono::steady_clock::now();
    ranking = solve(eq, mann::Deadline::unlimited());
    ranking.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  } else {
    ranking = mann::solve_with_timeout(solve, eq, a.timeout);
  }

  std::size_t depth = std::min<std::size_t>(ranking.candidates.size(),
                                            a.topk > 0 ? static_cast<std::size_t>(a.topk)
                                                       : ranking.candidates.size());
  if (a.as_json) {
    json j{{"solver", a.solver},
           {"a", a.a},
           {"b", a.b},
           {"c", a.c},
           {"timed_out", ranking.timed_out},
           {"elapsed_ms", ranking.elapsed_ms}};
    json cands = json::array();
    for (std::size_t i = 0; i < depth; ++i)
      cands.push_back(mann::word_to_utf8(ranking.candidates[i]));
    j["candidates"] = cands;
    std::cout << j.dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < depth; ++i)
      std::cout << (i + 1) << "\t" << mann::word_to_utf8(ranking.candidates[i]) << "\n";
    if (ranking.timed_out) std::cout << "(timed out)\n";
  }
  return 0;
}

// --- benchmark ---

struct BenchmarkArgs {
  std::string data, out, split = "test";
  std::vector<std::string> solvers;
  std::vector<std::uint64_t> seeds = {0};
  double timeout = 10.0;
  long limit = 0;  // 0: all equations
  SolverOptions options;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  if (a.data.empty()) throw UsageError("benchmark needs --data");
  if (a.solvers.empty()) throw UsageError("no solvers requested; pass --solvers");
  if (a.seeds.empty()) throw UsageError("no seeds requested");
  if (a.timeout < 0) throw UsageError("benchmark needs a timeout of at least 0 seconds");
  if (a.split != "train" && a.split != "dev" && a.split != "test")
    throw UsageError("unknown split: " + a.split);

  json config{{"command", "benchmark"},
              {"data", a.data},
              {"split", a.split},
              {"solvers", a.solvers},
              {"seeds", a.seeds},
              {"timeout", a.timeout},
              {"limit", a.limit},
              {"models", a.options.models},
              {"trials", a.options.trials},
              {"node_limit", a.options.node_limit},
              {"prefilter", a.options.prefilter}};
  fs::path out = run_dir(a.out, "benchmark", config);

  std::vector<mann::AnalogyQuadruple> equations =
      parse_quadruples_tsv(fs::path(a.data) / (a.split + ".tsv"));
  if (a.limit > 0 && equations.size() > static_cast<std::size_t>(a.limit))
    equations.resize(static_cast<std::size_t>(a.limit));
  if (equations.empty()) throw std::runtime_error("no equations in split " + a.split);

  SolverOptions options = a.options;
  if (options.data.empty()) options.data = a.data;
  SolverKit kit;
  std::vector<mann::SolverSpec> specs;
  for (const std::string& id : a.solvers)
    specs.push_back({id, make_solver_factory(id, options, kit)});

  mann::BenchmarkResult result = mann::run_benchmark(specs, equations, a.seeds, a.timeout);

  fs::create_directories(out);
  mann::write_benchmark_bundle(out, result, a.seeds, a.timeout, equations.size());
  write_text(out / "run_config.json", config.dump(2) + "\n");

  std::cout << mann::benchmark_table(result);
  std::cout << "bundle " << out.string() << "\n";
  return 0;
}

// --- report ---

struct ReportArgs {
  std::string bundle;
};

// Renders the aggregate table from a bundle's metrics.json after checking
// internal consistency: per-run hit@k monotonicity and aggregate mean/std
// equal to recomputation from the per-seed runs.
int cmd_report(const ReportArgs& a) {
  if (a.bundle.empty()) throw UsageError("report needs --bundle");
  json metrics = json::parse(read_text(fs::path(a.bundle) / "metrics.json"));
  if (metrics.at("kind").get<std::string>() != "benchmark_metrics")
    throw std::runtime_error(a.bundle + ": not a benchmark bundle");

  std::map<std::string, std::map<int, std::vector<double>>> per_solver;
  for (const auto& run : metrics.at("runs")) {
    std::vector<std::pair<int, double>> hits;
    for (const auto& [key, value] : run.at("hits").items())
      hits.push_back({std::stoi(key.substr(4)), value.get<double>()});
    std::sort(hits.begin(), hits.end());
    for (std::size_t i = 1; i < hits.size(); ++i)
      if (hits[i].second < hits[i - 1].second)
        throw std::runtime_error("hit@k not monotone for solver " +
                                 run.at("solver").get<std::string>());
    for (const auto& [k, rate] : hits)
      per_solver[run.at("solver").get<std::string>()][k].push_back(rate);
  }
  for (const auto& solver : metrics.at("solvers")) {
    const std::string id = solver.at("solver").get<std::string>();
    for (const auto& [key, value] : solver.at("hits").items()) {
      int k = std::stoi(key.substr(4));
      mann::MeanStd expect = mann::mean_std(per_solver.at(id).at(k));
      double mean = value.at("mean").get<double>();
      double std_dev = value.at("std").get<double>();
      if (std::abs(mean - expect.mean) > 1e-9 || std::abs(std_dev - expect.std) > 1e-9)
        throw std::runtime_error("aggregate " + key + " for " + id +
                                 " does not match recomputation from runs");
    }
  }

  std::printf("%-16s", "solver");
  for (int k : mann::hit_at_k_values()) std::printf("  %10s", ("hit@" + std::to_string(k)).c_str());
  std::printf("  %8s %8s\n", "timeouts", "failures");
  for (const auto& solver : metrics.at("solvers")) {
    std::printf("%-16s", solver.at("solver").get<std::string>().c_str());
    for (int k : mann::hit_at_k_values()) {
      const auto& h = solver.at("hits").at("hit@" + std::to_string(k));
      std::printf("  %.2f±%.2f", h.at("mean").get<double>(), h.at("std").get<double>());
    }
    std::printf("  %8llu %8llu\n",
                static_cast<unsigned long long>(solver.at("timeouts").get<std::uint64_t>()),
                static_cast<unsigned long long>(solver.at("failures").get<std::uint64_t>()));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  PrepareArgs prepare;
  TrainArgs train;
  SolveArgs solve;
  BenchmarkArgs benchmark;
  ReportArgs report;
  std::string config_path;

  ConfigFile config;
  try {
    std::string prescan = prescan_config_path(argc, argv);
    if (!prescan.empty()) config.load(prescan);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  CLI::App app{"morphological analogy toolkit"};
  app.require_subcommand(1);

  auto add_config_flag = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file preloading any flag of this command");
  };

  CLI::App* p = app.add_subcommand("prepare", "build corpus, splits, and word lists");
  add_config_flag(p);
  config.apply("input", prepare.input);
  config.apply("out", prepare.out);
  config.apply("column_order", prepare.column_order);
  config.apply("strict", prepare.strict);
  config.apply("seed", prepare.seed);
  config.apply("dev", prepare.sizes.dev);
  config.apply("test", prepare.sizes.test);
  config.apply("train_max", prepare.sizes.train_max);
  config.apply("word_dev", prepare.word_sizes.dev);
  config.apply("word_test", prepare.word_sizes.test);
  config.apply("word_train_max", prepare.word_sizes.train_max);
  p->add_option("--input", prepare.input, "inflection triples, tab separated");
  p->add_option("--out", prepare.out, "output directory (default: hash-named run dir)");
  p->add_option("--column-order", prepare.column_order,
                "lemma-features-form or lemma-form-features");
  p->add_flag("--strict", prepare.strict, "fail on the first malformed line");
  p->add_option("--seed", prepare.seed, "split seed");
  p->add_option("--dev", prepare.sizes.dev, "dev quadruples");
  p->add_option("--test", prepare.sizes.test, "test quadruples");
  p->add_option("--train-max", prepare.sizes.train_max, "training quadruple cap");
  p->add_option("--word-dev", prepare.word_sizes.dev, "dev words");
  p->add_option("--word-test", prepare.word_sizes.test, "test words");
  p->add_option("--word-train-max", prepare.word_sizes.train_max, "training word cap");

  CLI::App* t = app.add_subcommand("train", "train a model and write a checkpoint");
  add_config_flag(t);
  config.apply("model", train.model);
  config.apply("data", train.data);
  config.apply("out", train.out);
  config.apply("init_from", train.init_from);
  config.apply("seed", train.seed);
  config.apply("optimizer", train.optimizer);
  config.apply("lr", train.lr);
  config.apply("batch", train.batch);
  config.apply("epochs", train.epochs);
  config.apply("patience", train.patience);
  config.apply("phase1_patience", train.phase1_patience);
  config.apply("clip", train.clip);
  config.apply("dev_seed", train.dev_seed);
  config.apply("char_dim", train.char_dim);
  config.apply("filters", train.filters);
  config.apply("min_length", train.min_length);
  config.apply("windows", train.windows);
  config.apply("stage1", train.stage1);
  config.apply("stage2", train.stage2);
  config.apply("annr_hidden", train.annr_hidden);
  config.apply("ae_hidden", train.ae_hidden);
  config.apply("max_decode", train.max_decode);
  config.apply("decode_slack", train.decode_slack);
  t->add_option("--model", train.model, "ae, annc, cnn-annr, or ae-annr");
  t->add_option("--data", train.data, "prepared data directory");
  t->add_option("--out", train.out, "output directory (default: hash-named run dir)");
  t->add_option("--init-from", train.init_from, "run directory holding prerequisite checkpoints");
  t->add_option("--seed", train.seed, "initialization and shuffle seed");
  t->add_option("--optimizer", train.optimizer, "adam or nadam");
  t->add_option("--lr", train.lr, "learning rate");
  t->add_option("--batch", train.batch, "batch size");
  t->add_option("--epochs", train.epochs, "epoch cap");
  t->add_option("--patience", train.patience, "early stopping patience");
  t->add_option("--phase1-patience", train.phase1_patience, "frozen-phase patience");
  t->add_option("--clip", train.clip, "gradient norm cap, 0 disables");
  t->add_option("--dev-seed", train.dev_seed, "dev augmentation seed");
  t->add_option("--char-dim", train.char_dim, "character embedding width");
  t->add_option("--filters", train.filters, "filters per window size");
  t->add_option("--min-length", train.min_length, "padding floor");
  t->add_option("--windows", train.windows, "window sizes")->delimiter(',');
  t->add_option("--stage1", train.stage1, "classifier stage-one filters");
  t->add_option("--stage2", train.stage2, "classifier stage-two filters");
  t->add_option("--annr-hidden", train.annr_hidden, "regressor hidden width, 0 = embedding width");
  t->add_option("--ae-hidden", train.ae_hidden, "encoder hidden size per direction");
  t->add_option("--max-decode", train.max_decode, "greedy decode budget floor");
  t->add_option("--decode-slack", train.decode_slack, "extra decode steps over input length");

  CLI::App* s = app.add_subcommand("solve", "solve one equation a : b :: c : x");
  add_config_flag(s);
  config.apply("solver", solve.solver);
  config.apply("models", solve.options.models);
  config.apply("data", solve.options.data);
  config.apply("seed", solve.seed);
  config.apply("trials", solve.options.trials);
  config.apply("node_limit", solve.options.node_limit);
  config.apply("prefilter", solve.options.prefilter);
  config.apply("topk", solve.topk);
  config.apply("timeout", solve.timeout);
  s->add_option("--solver", solve.solver,
                "one of: alea, kolmo, parallelogram, 3cosadd, 3cosmul, cnn-annr, cnn-annc, "
                "ae-annr");
  s->add_option("a", solve.a, "first word")->required();
  s->add_option("b", solve.b, "second word")->required();
  s->add_option("c", solve.c, "third word")->required();
  s->add_option("--models", solve.options.models, "run directory holding model checkpoints");
  s->add_option("--data", solve.options.data, "prepared data directory for the candidate pool");
  s->add_option("--seed", solve.seed, "random seed for stochastic solvers");
  s->add_option("--trials", solve.options.trials, "sampling trials");
  s->add_option("--node-limit", solve.options.node_limit, "search budget");
  s->add_option("--prefilter", solve.options.prefilter, "classifier shortlist size, 0 = full pool");
  s->add_option("--topk", solve.topk, "candidates to print");
  s->add_option("--timeout", solve.timeout, "seconds, negative = unlimited");
  s->add_flag("--json", solve.as_json, "machine-readable output");

  CLI::App* b = app.add_subcommand("benchmark", "run solvers over a split and write a bundle");
  add_config_flag(b);
  config.apply("data", benchmark.data);
  config.apply("out", benchmark.out);
  config.apply("split", benchmark.split);
  config.apply("solvers", benchmark.solvers);
  config.apply("seeds", benchmark.seeds);
  config.apply("timeout", benchmark.timeout);
  config.apply("limit", benchmark.limit);
  config.apply("models", benchmark.options.models);
  config.apply("trials", benchmark.options.trials);
  config.apply("node_limit", benchmark.options.node_limit);
  config.apply("prefilter", benchmark.options.prefilter);
  b->add_option("--data", benchmark.data, "prepared data directory");
  b->add_option("--out", benchmark.out, "bundle directory (default: hash-named run dir)");
  b->add_option("--split", benchmark.split, "train, dev, or test");
  b->add_option("--solvers", benchmark.solvers, "solver ids, comma separated")->delimiter(',');
  b->add_option("--seeds", benchmark.seeds, "seeds, comma separated")->delimiter(',');
  b->add_option("--timeout", benchmark.timeout, "per-equation seconds");
  b->add_option("--limit", benchmark.limit, "cap on equations, 0 = all");
  b->add_option("--models", benchmark.options.models, "run directory holding model checkpoints");
  b->add_option("--trials", benchmark.options.trials, "sampling trials");
  b->add_option("--node-limit", benchmark.options.node_limit, "search budget");
  b->add_option("--prefilter", benchmark.options.prefilter, "classifier shortlist size");

  CLI::App* r = app.add_subcommand("report", "validate a bundle and print its table");
  add_config_flag(r);
  config.apply("bundle", report.bundle);
  r->add_option("--bundle", report.bundle, "benchmark bundle directory");

  try {
    config.check_unknown();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(p)) return cmd_prepare(prepare);
    if (app.got_subcommand(t)) return cmd_train(train);
    if (app.got_subcommand(s)) return cmd_solve(solve);
    if (app.got_subcommand(b)) return cmd_benchmark(benchmark);
    if (app.got_subcommand(r)) return cmd_report(report);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
