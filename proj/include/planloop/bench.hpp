#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "planloop/chaincheck.hpp"
#include "planloop/oracle.hpp"
#include "planloop/orchestrator.hpp"
#include "planloop/taskgen.hpp"
#include "planloop/transcript.hpp"

namespace planloop {

struct BenchRow {
  std::string variant;
  double success_rate_mean = 0;  // percent
  double success_rate_std = 0;
  double exec_calls_mean = 0;
  double exec_calls_std = 0;
  double tokens_mean = 0;
  double tokens_std = 0;
  int episodes = 0;
  int repetitions = 0;
};

struct BenchMetadata {
  std::uint64_t seed = 0;
  std::string backend;
  double p_fail = 0;
  std::string corpus_hash;
  std::string token_count_method;  // reported | whitespace | mixed
  int aborted_episodes = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  BenchMetadata metadata;
};

// --- backend factories ---------------------------------------------------------

struct EpisodeSetup {
  const Environment* env = nullptr;
  WorldState initial;
  std::string episode_id;
  int task_index = -1;
  int repetition = -1;
};

using BackendFactory = std::function<RoleBackends(const EpisodeSetup&)>;

inline BackendFactory oracle_backend_factory(OracleConfig config) {
  return [config](const EpisodeSetup& setup) {
    auto oracle =
        std::make_shared<OracleBackend>(*setup.env, setup.initial, config);
    return RoleBackends{oracle, oracle, oracle};
  };
}

// Oracle planner/eo with a fixed executor completion; probes the timeout
// rule and the CodeError taxonomy with an always-unparseable executor.
inline BackendFactory static_executor_factory(OracleConfig planner_config,
                                              std::string executor_content) {
  return [planner_config,
          executor_content](const EpisodeSetup& setup) {
    auto oracle = std::make_shared<OracleBackend>(*setup.env, setup.initial,
                                                  planner_config);
    auto fixed = std::make_shared<StaticBackend>(executor_content);
    return RoleBackends{oracle, oracle, fixed};
  };
}

inline BackendFactory replay_backend_factory(
    const std::vector<EpisodeTranscript>& recorded) {
  auto by_id = std::make_shared<std::map<std::string, std::vector<ReplayRecord>>>();
  for (const auto& t : recorded) (*by_id)[t.episode_id] = replay_records_for(t);
  return [by_id](const EpisodeSetup& setup) {
    auto it = by_id->find(setup.episode_id);
    if (it == by_id->end())
      throw ReplayExhausted("no recorded episode '" + setup.episode_id + "'");
    auto replay = std::make_shared<ReplayBackend>(it->second);
    return RoleBackends{replay, replay, replay};
  };
}

// --- parallel episode dispatch ----------------------------------------------------

inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  unsigned count = std::min<unsigned>(workers, static_cast<unsigned>(n));
  threads.reserve(count);
  for (unsigned w = 0; w < count; ++w) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

// --- corpus runs -----------------------------------------------------------------

struct RunCorpusResult {
  std::vector<EpisodeTranscript> transcripts;
  BenchReport report;
};

namespace detail {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

inline double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  double m = mean(xs);
  double sum = 0;
  for (double x : xs) sum += (x - m) * (x - m);
  return std::sqrt(sum / static_cast<double>(xs.size()));
}

}  // namespace detail

inline BenchRow aggregate_row(const std::string& variant,
                              const std::vector<EpisodeTranscript>& transcripts,
                              int repetitions, std::size_t tasks_per_rep) {
  BenchRow row;
  row.variant = variant;
  row.episodes = static_cast<int>(transcripts.size());
  row.repetitions = repetitions;
  std::vector<double> success_by_rep, calls_by_rep, tokens_by_rep;
  for (int r = 0; r < repetitions; ++r) {
    double successes = 0, calls = 0, tokens = 0, count = 0;
    for (const auto& t : transcripts) {
      if (t.repetition != r) continue;
      count += 1;
      if (t.outcome == Outcome::Success) successes += 1;
      calls += t.metrics.execution_calls;
      tokens += static_cast<double>(t.metrics.tokens_out_total);
    }
    if (count == 0) count = static_cast<double>(tasks_per_rep);
    if (count == 0) continue;
    success_by_rep.push_back(100.0 * successes / count);
    calls_by_rep.push_back(calls / count);
    tokens_by_rep.push_back(tokens / count);
  }
  row.success_rate_mean = detail::mean(success_by_rep);
  row.success_rate_std = detail::stddev(success_by_rep);
  row.exec_calls_mean = detail::mean(calls_by_rep);
  row.exec_calls_std = detail::stddev(calls_by_rep);
  row.tokens_mean = detail::mean(tokens_by_rep);
  row.tokens_std = detail::stddev(tokens_by_rep);
  return row;
}

inline std::string token_method_for(
    const std::vector<EpisodeTranscript>& transcripts) {
  bool any_reported = false, any_counted = false;
  for (const auto& t : transcripts)
    for (const auto& ia : t.interactions)
      (ia.tokens_reported ? any_reported : any_counted) = true;
  if (any_reported && any_counted) return "mixed";
  if (any_reported) return "reported";
  return "whitespace";
}

// Repetition k uses instruction variant k for every task; per-episode seeds
// derive from (corpus seed, task index, repetition).
inline RunCorpusResult run_corpus(const Corpus& corpus, Variant variant,
                                  int repetitions,
                                  const BackendFactory& make_backends,
                                  const std::string& backend_name,
                                  double p_fail, unsigned concurrency = 1) {
  if (corpus.tasks.empty()) throw ConfigError("corpus is empty");
  const Environment& env = corpus.env;
  PrimitiveRegistry registry = registry_for(env, p_fail);

  struct Job {
    std::size_t task_index;
    int repetition;
  };
  std::vector<Job> jobs;
  for (int r = 0; r < repetitions; ++r)
    for (std::size_t i = 0; i < corpus.tasks.size(); ++i)
      jobs.push_back({i, r});

  std::vector<EpisodeTranscript> transcripts(jobs.size());
  parallel_for(jobs.size(), concurrency, [&](std::size_t j) {
    const Job& job = jobs[j];
    const TaskSpec& task = corpus.tasks[job.task_index];
    EpisodeSetup setup;
    setup.env = &env;
    setup.initial = task_initial_state(env, task);
    setup.task_index = static_cast<int>(job.task_index);
    setup.repetition = job.repetition;
    setup.episode_id = "t" + std::to_string(job.task_index) + "-r" +
                       std::to_string(job.repetition);

    PipelineConfig config = variant_config(variant);
    config.grasp_failure_prob = p_fail;
    config.seed = derive_seed(corpus.corpus_seed, job.task_index,
                              static_cast<std::uint64_t>(job.repetition));

    const std::string& instruction =
        task.instructions[static_cast<std::size_t>(job.repetition) %
                          task.instructions.size()];
    RoleBackends backends = make_backends(setup);
    EpisodeTranscript t =
        variant == Variant::Cap
            ? run_cap_episode(instruction, task.goal, env, setup.initial,
                              registry, config, backends)
            : run_episode(instruction, task.goal, env, setup.initial, registry,
                          config, backends);
    t.episode_id = setup.episode_id;
    t.task_index = setup.task_index;
    t.repetition = setup.repetition;
    t.variant = variant_name(variant);
    transcripts[j] = std::move(t);
  });

  RunCorpusResult result;
  result.report.rows.push_back(aggregate_row(variant_name(variant), transcripts,
                                             repetitions, corpus.tasks.size()));
  result.report.metadata.seed = corpus.corpus_seed;
  result.report.metadata.backend = backend_name;
  result.report.metadata.p_fail = p_fail;
  result.report.metadata.corpus_hash = to_hex(fnv1a64(to_json(corpus).dump()));
  result.report.metadata.token_count_method = token_method_for(transcripts);
  for (const auto& t : transcripts)
    if (t.outcome == Outcome::Aborted) ++result.report.metadata.aborted_episodes;
  result.transcripts = std::move(transcripts);
  return result;
}

// Rebuilds a report from recorded transcripts (grouped by variant).
inline BenchReport report_from_transcripts(
    const std::vector<EpisodeTranscript>& transcripts,
    const BenchMetadata& metadata) {
  BenchReport report;
  report.metadata = metadata;
  std::vector<std::string> variants;
  for (const auto& t : transcripts)
    if (std::find(variants.begin(), variants.end(), t.variant) ==
        variants.end())
      variants.push_back(t.variant);
  for (const auto& v : variants) {
    std::vector<EpisodeTranscript> group;
    int max_rep = -1;
    for (const auto& t : transcripts)
      if (t.variant == v) {
        group.push_back(t);
        max_rep = std::max(max_rep, t.repetition);
      }
    std::size_t tasks_per_rep = 0;
    for (const auto& t : group)
      if (t.repetition == 0) ++tasks_per_rep;
    report.rows.push_back(
        aggregate_row(v, group, max_rep + 1, tasks_per_rep));
  }
  report.metadata.token_count_method = token_method_for(transcripts);
  report.metadata.aborted_episodes = 0;
  for (const auto& t : transcripts)
    if (t.outcome == Outcome::Aborted) ++report.metadata.aborted_episodes;
  return report;
}

// --- report emission ----------------------------------------------------------------

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline Json report_to_json(const BenchReport& report) {
  Json j;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["variant"] = r.variant;
    row["success_rate_mean"] = r.success_rate_mean;
    row["success_rate_std"] = r.success_rate_std;
    row["exec_calls_mean"] = r.exec_calls_mean;
    row["exec_calls_std"] = r.exec_calls_std;
    row["tokens_mean"] = r.tokens_mean;
    row["tokens_std"] = r.tokens_std;
    row["episodes"] = r.episodes;
    row["repetitions"] = r.repetitions;
    rows.push_back(row);
  }
  j["rows"] = rows;
  Json meta;
  meta["seed"] = report.metadata.seed;
  meta["backend"] = report.metadata.backend;
  meta["p_fail"] = report.metadata.p_fail;
  meta["corpus_hash"] = report.metadata.corpus_hash;
  meta["token_count_method"] = report.metadata.token_count_method;
  meta["aborted_episodes"] = report.metadata.aborted_episodes;
  j["metadata"] = meta;
  return j;
}

inline BenchReport report_from_json(const Json& j) {
  BenchReport report;
  for (const auto& row : j.at("rows")) {
    BenchRow r;
    r.variant = row.at("variant").get<std::string>();
    r.success_rate_mean = row.at("success_rate_mean").get<double>();
    r.success_rate_std = row.at("success_rate_std").get<double>();
    r.exec_calls_mean = row.at("exec_calls_mean").get<double>();
    r.exec_calls_std = row.at("exec_calls_std").get<double>();
    r.tokens_mean = row.at("tokens_mean").get<double>();
    r.tokens_std = row.at("tokens_std").get<double>();
    r.episodes = row.at("episodes").get<int>();
    r.repetitions = row.at("repetitions").get<int>();
    report.rows.push_back(r);
  }
  const Json& meta = j.at("metadata");
  report.metadata.seed = meta.at("seed").get<std::uint64_t>();
  report.metadata.backend = meta.at("backend").get<std::string>();
  report.metadata.p_fail = meta.at("p_fail").get<double>();
  report.metadata.corpus_hash = meta.at("corpus_hash").get<std::string>();
  report.metadata.token_count_method =
      meta.at("token_count_method").get<std::string>();
  report.metadata.aborted_episodes = meta.at("aborted_episodes").get<int>();
  return report;
}

inline std::string emit_report(const BenchReport& report,
                               const std::string& format) {
  if (format == "json") return report_to_json(report).dump(2) + "\n";
  if (format != "markdown" && format != "md")
    throw ConfigError("unknown report format: " + format);
  std::string out;
  out += "| Architecture | Success rate | Execution calls | Tokens output |\n";
  out += "|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    out += "| " + r.variant + " | " + detail::fmt2(r.success_rate_mean) +
           " ± " + detail::fmt2(r.success_rate_std) + " | " +
           detail::fmt2(r.exec_calls_mean) + " ± " +
           detail::fmt2(r.exec_calls_std) + " | " +
           detail::fmt2(r.tokens_mean) + " ± " + detail::fmt2(r.tokens_std) +
           " |\n";
  }
  out += "\nbackend: " + report.metadata.backend +
         ", p_fail: " + detail::fmt2(report.metadata.p_fail) +
         ", seed: " + std::to_string(report.metadata.seed) +
         ", corpus: " + report.metadata.corpus_hash +
         ", tokens: " + report.metadata.token_count_method +
         ", aborted: " + std::to_string(report.metadata.aborted_episodes) +
         "\n";
  return out;
}

}  // namespace planloop
