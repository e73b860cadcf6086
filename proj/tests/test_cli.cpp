// Drives the command-line tool as a subprocess through a scratch workspace:
// dataset preparation, training runs, single solves, benchmarks, reports,
// config preloading, and the exit codes of the error paths. The binary path
// arrives in the MANN_CLI environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mann/data.hpp"
#include "mann/unicode.hpp"
#include "support/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string& cli_path() {
  static const std::string path = [] {
    const char* env = std::getenv("MANN_CLI");
    REQUIRE(env != nullptr);
    return std::string(env);
  }();
  return path;
}

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined

  bool contains(const std::string& needle) const {
    return output.find(needle) != std::string::npos;
  }
};

CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  std::string command = env_prefix + cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof(buffer), pipe))
    result.output.append(buffer, n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// workspace with a prepared dataset and one small classifier run, built once
struct Workspace {
  fs::path root, corpus, data, annc;

  Workspace() {
    root = fs::temp_directory_path() / "mann_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    corpus = root / "toy.tsv";
    std::ofstream(corpus) << toy::tsv(toy::triples(30, 7));
    data = root / "data";
    CmdResult prep = run_cli("prepare --input " + corpus.string() + " --out " + data.string() +
                             " --dev 40 --test 40 --train-max 400"
                             " --word-dev 20 --word-test 20 --word-train-max 400");
    REQUIRE(prep.exit_code == 0);
    annc = root / "annc_run";
    CmdResult train = run_cli("train --model annc --data " + data.string() + " --out " +
                              annc.string() +
                              " --seed 0 --epochs 2 --batch 16 --char-dim 8 --windows 2,3"
                              " --filters 4 --min-length 4 --stage1 8 --stage2 4");
    REQUIRE(train.exit_code == 0);
  }
};

const Workspace& ws() {
  static const Workspace w;
  return w;
}

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace

TEST_CASE("prepare writes a consistent manifest and reproduces byte for byte") {
  json manifest = json::parse(read_file(ws().data / "dataset.json"));
  CHECK(manifest.at("kind") == "dataset_manifest");
  CHECK(manifest.at("counts").at("triples") == 150);
  CHECK(manifest.at("counts").at("corpus") == 2325);  // 5 tags x (C(30,2) + 30)
  CHECK(manifest.at("counts").at("train") == 400);
  CHECK(manifest.at("counts").at("dev") == 40);
  CHECK(manifest.at("counts").at("test") == 40);
  CHECK(manifest.at("counts").at("word_pool") == 180);

  // recorded checksums match the files on disk
  for (const auto& [name, sum] : manifest.at("checksums").items()) {
    std::string content = read_file(ws().data / name);
    CHECK(sum.get<std::string>() == hex16(mann::fnv1a64(content.data(), content.size())));
  }

  // a second run with the same configuration emits identical bytes
  fs::path again = ws().root / "data_again";
  CmdResult prep = run_cli("prepare --input " + ws().corpus.string() + " --out " +
                           again.string() +
                           " --dev 40 --test 40 --train-max 400"
                           " --word-dev 20 --word-test 20 --word-train-max 400");
  REQUIRE(prep.exit_code == 0);
  for (const char* name : {"train.tsv", "dev.tsv", "test.tsv", "words.txt", "dataset.json"})
    CHECK(read_file(ws().data / name) == read_file(again / name));

  // quadruple rows: four words and the shared feature tag
  std::string first_row = lines_of(read_file(ws().data / "dev.tsv")).at(0);
  CHECK(std::count(first_row.begin(), first_row.end(), '\t') == 4);
}

TEST_CASE("prepare usage errors exit with the usage code") {
  CHECK(run_cli("prepare").exit_code == 2);
  CmdResult bad_order = run_cli("prepare --input " + ws().corpus.string() +
                                " --column-order sideways --out " +
                                (ws().root / "unused").string());
  CHECK(bad_order.exit_code == 2);
  CHECK(bad_order.contains("unknown column order"));
  CmdResult missing = run_cli("prepare --input " + (ws().root / "absent.tsv").string() +
                              " --out " + (ws().root / "unused2").string());
  CHECK(missing.exit_code == 1);
  CHECK(missing.contains("cannot read"));
}

TEST_CASE("training rejects unknown models and missing prerequisites") {
  CmdResult unknown = run_cli("train --model perceptron --data " + ws().data.string());
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.contains("unknown model"));

  CmdResult no_init = run_cli("train --model cnn-annr --data " + ws().data.string());
  CHECK(no_init.exit_code == 2);
  CHECK(no_init.contains("--init-from"));

  CmdResult bad_init = run_cli("train --model cnn-annr --data " + ws().data.string() +
                               " --init-from " + (ws().root / "nowhere").string() +
                               " --epochs 1");
  CHECK(bad_init.exit_code == 1);
  CHECK(bad_init.contains("missing embedder checkpoint"));

  CmdResult no_data = run_cli("train --model ae");
  CHECK(no_data.exit_code == 2);
  CHECK(no_data.contains("train needs --data"));
}

TEST_CASE("classifier run feeds the regressor run") {
  json report = json::parse(read_file(ws().annc / "report.json"));
  CHECK(report.at("kind") == "train_run");
  CHECK(report.at("checkpoints").at("embedder") == "embedder.mann");
  CHECK(report.at("report").at("kind") == "train_report");
  CHECK(fs::exists(ws().annc / "embedder.mann"));
  CHECK(fs::exists(ws().annc / "classifier.mann"));

  fs::path annr_run = ws().root / "annr_run";
  CmdResult train = run_cli("train --model cnn-annr --data " + ws().data.string() + " --out " +
                            annr_run.string() + " --init-from " + ws().annc.string() +
                            " --seed 0 --epochs 2 --batch 16");
  REQUIRE(train.exit_code == 0);
  CHECK(fs::exists(annr_run / "embedder.mann"));
  CHECK(fs::exists(annr_run / "regressor.mann"));
  json annr_report = json::parse(read_file(annr_run / "report.json"));
  // phase 1 froze the embedder
  CHECK(annr_report.at("report").at("frozen_checksum_before") ==
        annr_report.at("report").at("frozen_checksum_after"));
}

TEST_CASE("training twice with one seed yields identical checkpoints") {
  fs::path second = ws().root / "annc_second";
  CmdResult train = run_cli("train --model annc --data " + ws().data.string() + " --out " +
                            second.string() +
                            " --seed 0 --epochs 2 --batch 16 --char-dim 8 --windows 2,3"
                            " --filters 4 --min-length 4 --stage1 8 --stage2 4");
  REQUIRE(train.exit_code == 0);
  CHECK(read_file(ws().annc / "embedder.mann") == read_file(second / "embedder.mann"));
  CHECK(read_file(ws().annc / "classifier.mann") == read_file(second / "classifier.mann"));
}

TEST_CASE("solve handles the worked examples from the symbolic solvers") {
  CmdResult alea = run_cli("solve --solver alea cat cats animal --seed 1");
  REQUIRE(alea.exit_code == 0);
  CHECK(lines_of(alea.output).at(0) == "1\tanimals");

  CmdResult kolmo = run_cli("solve --solver kolmo walk walked talk");
  REQUIRE(kolmo.exit_code == 0);
  REQUIRE(lines_of(kolmo.output).size() == 1);
  CHECK(lines_of(kolmo.output).at(0) == "1\ttalked");

  CmdResult top3 = run_cli("solve --solver alea cat cats animal --seed 1 --topk 3");
  REQUIRE(top3.exit_code == 0);
  CHECK(lines_of(top3.output).size() == 3);
}

TEST_CASE("solve emits machine-readable output on request") {
  CmdResult r = run_cli("solve --solver kolmo walk walked talk --json");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.output);
  CHECK(j.at("solver") == "kolmo");
  CHECK(j.at("a") == "walk");
  CHECK(j.at("timed_out") == false);
  CHECK(j.at("candidates") == json::array({"talked"}));
  CHECK(j.at("elapsed_ms").get<double>() >= 0.0);
}

TEST_CASE("solve reports expiry under a zero timeout") {
  CmdResult r = run_cli("solve --solver kolmo walk walked talk --timeout 0");
  CHECK(r.exit_code == 0);
  CHECK(r.contains("(timed out)"));
}

TEST_CASE("solver usage errors exit with the usage code") {
  CmdResult unknown = run_cli("solve --solver oracle a b c");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.contains("unknown solver"));

  CmdResult no_models = run_cli("solve --solver 3cosmul a b c");
  CHECK(no_models.exit_code == 2);
  CHECK(no_models.contains("needs --models"));

  CHECK(run_cli("solve --solver kolmo a b").exit_code == 2);  // missing positional
  CHECK(run_cli("--bogus-flag").exit_code == 2);
}

TEST_CASE("retrieval solvers run against a trained embedder") {
  std::string dev_row = lines_of(read_file(ws().data / "dev.tsv")).at(0);
  std::istringstream in(dev_row);
  std::string a, b, c;
  std::getline(in, a, '\t');
  std::getline(in, b, '\t');
  std::getline(in, c, '\t');
  CmdResult r = run_cli("solve --solver 3cosmul --models " + ws().annc.string() + " --data " +
                        ws().data.string() + " " + a + " " + b + " " + c + " --topk 5");
  REQUIRE(r.exit_code == 0);
  CHECK(lines_of(r.output).size() == 5);

  CmdResult annc = run_cli("solve --solver cnn-annc --models " + ws().annc.string() +
                           " --data " + ws().data.string() + " " + a + " " + b + " " + c +
                           " --prefilter 3");
  REQUIRE(annc.exit_code == 0);
  CHECK(lines_of(annc.output).size() == 3);  // shortlist bounds the ranking
}

TEST_CASE("benchmark completes under a zero timeout and counts misses") {
  fs::path bundle = ws().root / "bench_zero";
  CmdResult r = run_cli("benchmark --data " + ws().data.string() +
                        " --solvers kolmo --seeds 0 --split dev --limit 5 --timeout 0 --out " +
                        bundle.string());
  REQUIRE(r.exit_code == 0);
  json metrics = json::parse(read_file(bundle / "metrics.json"));
  REQUIRE(metrics.at("solvers").size() == 1);
  CHECK(metrics.at("solvers")[0].at("timeouts") == 5);
  CHECK(metrics.at("solvers")[0].at("hits").at("hit@10").at("mean") == 0.0);
}

TEST_CASE("benchmark aggregates seeds and its bundle passes the report check") {
  fs::path bundle = ws().root / "bench_two_seeds";
  CmdResult r = run_cli("benchmark --data " + ws().data.string() +
                        " --solvers alea,kolmo --seeds 0,1 --split dev --limit 10"
                        " --timeout 5 --out " +
                        bundle.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("alea"));

  json metrics = json::parse(read_file(bundle / "metrics.json"));
  CHECK(metrics.at("runs").size() == 4);  // two solvers, two seeds
  // the toy language is pure suffixation, so both symbolic solvers hit
  for (const auto& solver : metrics.at("solvers"))
    CHECK(solver.at("hits").at("hit@1").at("mean").get<double>() == 1.0);
  CHECK(fs::exists(bundle / "trace_alea_0.tsv"));
  CHECK(fs::exists(bundle / "trace_kolmo_1.tsv"));
  CHECK(fs::exists(bundle / "run_config.json"));

  CmdResult report = run_cli("report --bundle " + bundle.string());
  REQUIRE(report.exit_code == 0);
  CHECK(report.contains("±"));
  CHECK(report.contains("kolmo"));
}

TEST_CASE("benchmark usage errors exit with the usage code") {
  CHECK(run_cli("benchmark --solvers kolmo").exit_code == 2);
  CHECK(run_cli("benchmark --data " + ws().data.string()).exit_code == 2);
  CmdResult bad_split = run_cli("benchmark --data " + ws().data.string() +
                                " --solvers kolmo --split validation");
  CHECK(bad_split.exit_code == 2);
  CHECK(bad_split.contains("unknown split"));
  CmdResult bad_timeout = run_cli("benchmark --data " + ws().data.string() +
                                  " --solvers kolmo --timeout -1");
  CHECK(bad_timeout.exit_code == 2);
}

TEST_CASE("report rejects tampered and foreign bundles") {
  fs::path bundle = ws().root / "bench_tampered";
  CmdResult r = run_cli("benchmark --data " + ws().data.string() +
                        " --solvers kolmo --seeds 0,1 --split dev --limit 5"
                        " --timeout 5 --out " +
                        bundle.string());
  REQUIRE(r.exit_code == 0);

  json metrics = json::parse(read_file(bundle / "metrics.json"));
  metrics["solvers"][0]["hits"]["hit@1"]["mean"] = 0.123;
  std::ofstream(bundle / "metrics.json") << metrics.dump(2) << "\n";
  CmdResult tampered = run_cli("report --bundle " + bundle.string());
  CHECK(tampered.exit_code == 1);
  CHECK(tampered.contains("does not match recomputation"));

  fs::path foreign = ws().root / "not_a_bundle";
  fs::create_directories(foreign);
  std::ofstream(foreign / "metrics.json") << "{\"kind\":\"something_else\"}\n";
  CmdResult wrong_kind = run_cli("report --bundle " + foreign.string());
  CHECK(wrong_kind.exit_code == 1);
  CHECK(wrong_kind.contains("not a benchmark bundle"));

  CHECK(run_cli("report").exit_code == 2);
}

TEST_CASE("config files preload flags and reject unknown keys") {
  fs::path good = ws().root / "solve.json";
  std::ofstream(good) << R"({"solver": "kolmo", "timeout": 5.0})";
  CmdResult r = run_cli("solve --config " + good.string() + " walk walked talk");
  REQUIRE(r.exit_code == 0);
  CHECK(lines_of(r.output).at(0) == "1\ttalked");

  // explicit flags override the config file
  CmdResult overridden = run_cli("solve --config " + good.string() +
                                 " --solver alea --seed 1 cat cats animal");
  REQUIRE(overridden.exit_code == 0);
  CHECK(lines_of(overridden.output).at(0) == "1\tanimals");

  fs::path bad = ws().root / "bad.json";
  std::ofstream(bad) << R"({"solver": "kolmo", "bogus_key": 1})";
  CmdResult rejected = run_cli("solve --config " + bad.string() + " walk walked talk");
  CHECK(rejected.exit_code == 2);
  CHECK(rejected.contains("unknown config key"));

  fs::path not_object = ws().root / "arr.json";
  std::ofstream(not_object) << "[1, 2]";
  CHECK(run_cli("solve --config " + not_object.string() + " a b c").exit_code == 2);
}

TEST_CASE("runs land in hash-named directories under the data root") {
  fs::path root = ws().root / "auto_runs";
  CmdResult r = run_cli("prepare --input " + ws().corpus.string() +
                            " --dev 40 --test 40 --train-max 100"
                            " --word-dev 20 --word-test 20 --word-train-max 100",
                        "MORPHO_DATA_DIR=" + root.string() + " ");
  REQUIRE(r.exit_code == 0);
  bool found = false;
  for (const auto& entry : fs::directory_iterator(root)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("prepare-", 0) == 0 && fs::exists(entry.path() / "dataset.json"))
      found = true;
  }
  CHECK(found);
}
