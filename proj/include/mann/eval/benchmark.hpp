#pragma once

// Benchmark harness: runs a set of solvers over a shared list of analogy
// equations, several seeds each, and aggregates hit rates. Per-equation
// failures are recorded as misses so one bad input never aborts a run.
// Writes a bundle directory: metrics.json, one trace TSV per (solver, seed),
// and a plain-text summary table.

#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mann/data.hpp"
#include "mann/eval/metrics.hpp"
#include "mann/solve/ranking.hpp"
#include "mann/unicode.hpp"

namespace mann {

struct SolverSpec {
  std::string id;
  // builds a fresh solver for one seeded run
  std::function<SolveFn(std::uint64_t seed)> make;
};

struct EquationTrace {
  Word a, b, c, gold;
  std::vector<Word> top;  // up to 10 candidates
  bool timed_out = false;
  bool failed = false;  // solver threw
  long long elapsed_ms = 0;
};

struct SolverRun {
  std::string solver_id;
  std::uint64_t seed = 0;
  std::vector<EquationTrace> traces;
  std::map<int, double> hits;  // hit rate at k
  long long total_elapsed_ms = 0;
  std::size_t failures = 0;
  std::size_t timeouts = 0;
};

struct SolverSummary {
  std::string solver_id;
  std::map<int, MeanStd> hits;  // over seeds
  std::size_t failures = 0;
  std::size_t timeouts = 0;
};

struct BenchmarkResult {
  std::vector<SolverRun> runs;
  std::vector<SolverSummary> summaries;
};

// Runs one solver over all equations under a per-equation timeout.
inline SolverRun run_solver_once(const SolverSpec& spec, std::uint64_t seed,
                                 const std::vector<AnalogyQuadruple>& equations,
                                 double timeout_seconds) {
  SolverRun run;
  run.solver_id = spec.id;
  run.seed = seed;
  SolveFn solve = spec.make(seed);
  std::vector<SolverRanking> rankings;
  std::vector<Word> golds;
  rankings.reserve(equations.size());
  golds.reserve(equations.size());
  for (const auto& q : equations) {
    AnalogyEquation eq{q.a, q.b, q.c};
    EquationTrace trace;
    trace.a = q.a;
    trace.b = q.b;
    trace.c = q.c;
    trace.gold = q.d;
    SolverRanking ranking;
    try {
      ranking = solve_with_timeout(solve, eq, timeout_seconds);
    } catch (const std::exception&) {
      ranking = SolverRanking{};
      ranking.timed_out = false;
      trace.failed = true;
      ++run.failures;
    }
    trace.timed_out = ranking.timed_out;
    if (ranking.timed_out) ++run.timeouts;
    trace.elapsed_ms = ranking.elapsed_ms;
    run.total_elapsed_ms += ranking.elapsed_ms;
    std::size_t depth = std::min<std::size_t>(ranking.candidates.size(), 10);
    trace.top.assign(ranking.candidates.begin(), ranking.candidates.begin() + depth);
    rankings.push_back(std::move(ranking));
    golds.push_back(q.d);
    run.traces.push_back(std::move(trace));
  }
  run.hits = hit_at_k(rankings, golds);
  return run;
}

inline BenchmarkResult run_benchmark(const std::vector<SolverSpec>& solvers,
                                     const std::vector<AnalogyQuadruple>& equations,
                                     const std::vector<std::uint64_t>& seeds,
                                     double timeout_seconds) {
  BenchmarkResult result;
  for (const auto& spec : solvers) {
    SolverSummary summary;
    summary.solver_id = spec.id;
    std::map<int, std::vector<double>> per_k;
    for (std::uint64_t seed : seeds) {
      SolverRun run = run_solver_once(spec, seed, equations, timeout_seconds);
      for (const auto& [k, rate] : run.hits) per_k[k].push_back(rate);
      summary.failures += run.failures;
      summary.timeouts += run.timeouts;
      result.runs.push_back(std::move(run));
    }
    for (const auto& [k, rates] : per_k) summary.hits[k] = mean_std(rates);
    result.summaries.push_back(std::move(summary));
  }
  return result;
}

// --- bundle output ---

inline std::string trace_file_name(const std::string& solver_id, std::uint64_t seed) {
  return "trace_" + solver_id + "_" + std::to_string(seed) + ".tsv";
}

// Columns: A, B, C, gold, rank1..rank10, timed_out, elapsed_ms. Missing
// ranks are left empty so every row has the same column count.
inline void write_trace_tsv(std::ostream& out, const SolverRun& run) {
  out << "A\tB\tC\tgold";
  for (int r = 1; r <= 10; ++r) out << "\trank" << r;
  out << "\ttimed_out\telapsed_ms\n";
  for (const auto& t : run.traces) {
    out << word_to_utf8(t.a) << '\t' << word_to_utf8(t.b) << '\t' << word_to_utf8(t.c) << '\t'
        << word_to_utf8(t.gold);
    for (std::size_t r = 0; r < 10; ++r) {
      out << '\t';
      if (r < t.top.size()) out << word_to_utf8(t.top[r]);
    }
    out << '\t' << (t.timed_out ? 1 : 0) << '\t' << t.elapsed_ms << '\n';
  }
}

inline nlohmann::json benchmark_metrics_json(const BenchmarkResult& result,
                                             const std::vector<std::uint64_t>& seeds,
                                             double timeout_seconds, std::size_t num_equations) {
  nlohmann::json j;
  j["kind"] = "benchmark_metrics";
  j["timeout_seconds"] = timeout_seconds;
  j["num_equations"] = num_equations;
  j["seeds"] = seeds;
  nlohmann::json solvers = nlohmann::json::array();
  for (const auto& s : result.summaries) {
    nlohmann::json entry;
    entry["solver"] = s.solver_id;
    entry["failures"] = s.failures;
    entry["timeouts"] = s.timeouts;
    nlohmann::json hits;
    for (const auto& [k, ms] : s.hits) {
      hits["hit@" + std::to_string(k)] = {{"mean", ms.mean}, {"std", ms.std}};
    }
    entry["hits"] = hits;
    solvers.push_back(entry);
  }
  j["solvers"] = solvers;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json entry;
    entry["solver"] = r.solver_id;
    entry["seed"] = r.seed;
    entry["failures"] = r.failures;
    entry["timeouts"] = r.timeouts;
    entry["total_elapsed_ms"] = r.total_elapsed_ms;
    nlohmann::json hits;
    for (const auto& [k, rate] : r.hits) hits["hit@" + std::to_string(k)] = rate;
    entry["hits"] = hits;
    entry["trace_file"] = trace_file_name(r.solver_id, r.seed);
    runs.push_back(entry);
  }
  j["runs"] = runs;
  return j;
}

inline std::string benchmark_table(const BenchmarkResult& result) {
  std::ostringstream out;
  out << "solver";
  for (int k : hit_at_k_values()) out << "\thit@" << k;
  out << "\tfailures\ttimeouts\n";
  for (const auto& s : result.summaries) {
    out << s.solver_id;
    for (int k : hit_at_k_values()) {
      auto it = s.hits.find(k);
      if (it == s.hits.end()) {
        out << "\t-";
      } else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "\t%.4f±%.4f", it->second.mean, it->second.std);
        out << buf;
      }
    }
    out << '\t' << s.failures << '\t' << s.timeouts << '\n';
  }
  return out.str();
}

inline void write_benchmark_bundle(const std::filesystem::path& dir, const BenchmarkResult& result,
                                   const std::vector<std::uint64_t>& seeds, double timeout_seconds,
                                   std::size_t num_equations) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "metrics.json");
    out << benchmark_metrics_json(result, seeds, timeout_seconds, num_equations).dump(2) << '\n';
  }
  for (const auto& run : result.runs) {
    std::ofstream out(dir / trace_file_name(run.solver_id, run.seed));
    write_trace_tsv(out, run);
  }
  {
    std::ofstream out(dir / "table.txt");
    out << benchmark_table(result);
  }
}

}  // namespace mann
