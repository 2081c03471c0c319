#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planloop/bench.hpp"
#include "planloop/chaincheck.hpp"
#include "planloop/http_backend.hpp"
#include "planloop/oracle.hpp"
#include "planloop/orchestrator.hpp"
#include "planloop/taskgen.hpp"
#include "planloop/transcript.hpp"

namespace planloop {

namespace cli {

struct BackendChoice {
  std::string kind = "oracle";  // oracle | http | replay | static
  HttpBackendConfig http;
  std::string static_text = "I cannot produce code for this step right now.";
};

struct GlobalOptions {
  std::string config_file;
  BackendChoice backend;  // default binding for all three roles
  std::optional<BackendChoice> planner_backend;
  std::optional<BackendChoice> eo_backend;
  std::optional<BackendChoice> executor_backend;
  OracleConfig oracle;
  double p_fail = 0.10;
  double timeout_factor = 2.0;
  unsigned concurrency = 1;
  std::string replay_file;
};

inline void load_backend_block(const Json& b, BackendChoice& choice) {
  choice.kind = b.value("kind", choice.kind);
  choice.http.base_url = b.value("base_url", choice.http.base_url);
  choice.http.path = b.value("path", choice.http.path);
  choice.http.model = b.value("model", choice.http.model);
  choice.http.temperature = b.value("temperature", choice.http.temperature);
  choice.http.timeout_s = b.value("timeout_s", choice.http.timeout_s);
  choice.http.max_retries = b.value("max_retries", choice.http.max_retries);
  choice.static_text = b.value("text", choice.static_text);
}

inline void load_config_file(GlobalOptions& opts) {
  if (opts.config_file.empty()) return;
  std::ifstream in(opts.config_file);
  if (!in) throw ConfigError("cannot open config file: " + opts.config_file);
  Json j = Json::parse(in);
  if (j.contains("backend")) load_backend_block(j["backend"], opts.backend);
  if (j.contains("backends")) {
    // per-role bindings; each starts from the default block
    const Json& roles = j["backends"];
    auto load_role = [&](const char* role,
                         std::optional<BackendChoice>& out) {
      if (!roles.contains(role)) return;
      BackendChoice choice = opts.backend;
      load_backend_block(roles[role], choice);
      out = choice;
    };
    load_role("planner", opts.planner_backend);
    load_role("eo", opts.eo_backend);
    load_role("executor", opts.executor_backend);
  }
  opts.p_fail = j.value("p_fail", opts.p_fail);
  opts.timeout_factor = j.value("timeout_factor", opts.timeout_factor);
  opts.concurrency = j.value("concurrency", opts.concurrency);
}

inline void apply_env_overrides(GlobalOptions& opts) {
  if (const char* url = std::getenv("PLANLOOP_BASE_URL"))
    opts.backend.http.base_url = url;
  if (const char* model = std::getenv("PLANLOOP_MODEL"))
    opts.backend.http.model = model;
}

inline BackendFactory make_factory(const GlobalOptions& opts) {
  BackendChoice planner = opts.planner_backend.value_or(opts.backend);
  BackendChoice eo = opts.eo_backend.value_or(opts.backend);
  BackendChoice executor = opts.executor_backend.value_or(opts.backend);
  // "unparseable" is sugar: oracle planner/eo, fixed-prose executor
  if (opts.backend.kind == "unparseable") {
    planner.kind = "oracle";
    eo.kind = "oracle";
    executor.kind = "static";
  }

  auto replays =
      std::make_shared<std::map<std::string, std::vector<ReplayRecord>>>();
  for (const BackendChoice* c : {&planner, &eo, &executor}) {
    if (c->kind == "replay") {
      if (opts.replay_file.empty())
        throw ConfigError("replay backend needs --replay-transcripts");
      if (replays->empty())
        for (const auto& t :
             transcripts_from_records(read_jsonl_file(opts.replay_file)))
          (*replays)[t.episode_id] = replay_records_for(t);
    } else if (c->kind != "oracle" && c->kind != "http" &&
               c->kind != "static") {
      throw ConfigError("unknown backend kind: " + c->kind);
    }
  }

  OracleConfig oracle_config = opts.oracle;
  return [planner, eo, executor, oracle_config,
          replays](const EpisodeSetup& setup) {
    // oracle and replay instances are stateful and shared across the
    // roles of one episode
    std::shared_ptr<Backend> shared_oracle;
    std::shared_ptr<Backend> shared_replay;
    auto build = [&](const BackendChoice& choice) -> std::shared_ptr<Backend> {
      if (choice.kind == "oracle") {
        if (!shared_oracle)
          shared_oracle = std::make_shared<OracleBackend>(
              *setup.env, setup.initial, oracle_config);
        return shared_oracle;
      }
      if (choice.kind == "http")
        return std::make_shared<HttpBackend>(choice.http);
      if (choice.kind == "static")
        return std::make_shared<StaticBackend>(choice.static_text);
      if (!shared_replay) {
        auto it = replays->find(setup.episode_id);
        if (it == replays->end())
          throw ReplayExhausted("no recorded episode '" + setup.episode_id +
                                "'");
        shared_replay = std::make_shared<ReplayBackend>(it->second);
      }
      return shared_replay;
    };
    RoleBackends backends;
    backends.planner = build(planner);
    backends.eo = build(eo);
    backends.executor = build(executor);
    return backends;
  };
}

inline Environment env_by_name(const std::string& name) {
  if (name == "service") return build_service_env();
  if (name == "taskboard" || name == "industrial") return build_taskboard_env();
  throw ConfigError("unknown environment: " + name);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

inline Json run_header_record(const std::string& backend, double p_fail,
                              std::uint64_t seed, const std::string& variant,
                              int reps, const Environment& env,
                              const std::string& corpus_hash = "") {
  Json j;
  j["type"] = "run_header";
  j["backend"] = backend;
  j["p_fail"] = p_fail;
  j["seed"] = seed;
  j["variant"] = variant;
  j["reps"] = reps;
  j["corpus_hash"] = corpus_hash;
  j["env"] = to_json(env);
  return j;
}

inline void write_transcripts(const std::string& path, const Json& run_header,
                              const std::vector<EpisodeTranscript>& transcripts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write transcripts: " + path);
  out << run_header.dump() << "\n";
  for (const auto& t : transcripts) append_transcript(out, t);
}

// Source/target extraction for a raw instruction (run-task convenience; the
// corpus path carries these explicitly).
struct DerivedTask {
  std::string object;
  std::string source;
  std::string target;
};

inline std::optional<DerivedTask> derive_service_task(
    const Environment& env, const std::string& instruction) {
  DerivedTask d;
  for (const auto& o : env.objects)
    if (contains(instruction, o.name) && o.name.size() > d.object.size())
      d.object = o.name;
  if (d.object.empty()) return std::nullopt;

  const char* source_markers[] = {"from the ", "is currently on the ",
                                  "is now on the ", "is on the "};
  for (const char* marker : source_markers) {
    std::size_t at = instruction.find(marker);
    if (at == std::string::npos) continue;
    std::string rest = instruction.substr(at + std::string(marker).size());
    for (const auto& l : env.locations)
      if (rest.rfind(l.name, 0) == 0 && l.name.size() > d.source.size())
        d.source = l.name;
    if (!d.source.empty()) break;
  }
  if (d.source.empty()) return std::nullopt;

  std::size_t best = std::string::npos;
  for (const auto& l : env.locations) {
    if (l.name == d.source) continue;
    std::size_t pos = instruction.find(l.name);
    if (pos == std::string::npos) continue;
    if (pos < best || (pos == best && l.name.size() > d.target.size())) {
      best = pos;
      d.target = l.name;
    }
  }
  if (d.target.empty()) return std::nullopt;
  return d;
}

inline int cmd_gen_corpus(const GlobalOptions& opts, const std::string& env_name,
                          std::size_t n, std::uint64_t seed,
                          const std::string& out_path, bool paraphrase) {
  Environment env = env_by_name(env_name);
  Corpus corpus = generate_corpus(env, n, seed);
  if (paraphrase) {
    std::shared_ptr<Backend> backend;
    if (opts.backend.kind == "http")
      backend = std::make_shared<HttpBackend>(opts.backend.http);
    else
      backend = std::make_shared<OracleBackend>(env, env.initial, opts.oracle);
    paraphrase_corpus(corpus, backend);
  }
  write_file(out_path, to_json(corpus).dump(2) + "\n");
  std::cout << "wrote " << corpus.tasks.size() << " tasks to " << out_path
            << "\n";
  return 0;
}

inline int run_one_task(const GlobalOptions& opts, const Environment& env,
                        const TaskSpec& task, const std::string& instruction,
                        Variant variant, std::uint64_t seed,
                        const std::string& out_path) {
  PipelineConfig config = variant_config(variant);
  config.grasp_failure_prob = opts.p_fail;
  config.timeout_factor = opts.timeout_factor;
  config.seed = seed;

  WorldState initial = env.kind == EnvKind::Service
                           ? task_initial_state(env, task)
                           : env.initial;
  EpisodeSetup setup;
  setup.env = &env;
  setup.initial = initial;
  setup.episode_id = "task";
  RoleBackends backends = make_factory(opts)(setup);
  PrimitiveRegistry registry = registry_for(env, opts.p_fail);

  EpisodeTranscript t =
      variant == Variant::Cap
          ? run_cap_episode(instruction, task.goal, env, initial, registry,
                            config, backends)
          : run_episode(instruction, task.goal, env, initial, registry, config,
                        backends);
  t.episode_id = "task-0";
  t.variant = variant_name(variant);

  if (!out_path.empty()) {
    Json header = run_header_record(opts.backend.kind, opts.p_fail, seed,
                                    t.variant, 1, env);
    write_transcripts(out_path, header, {t});
  }
  std::cout << "outcome: " << outcome_name(t.outcome)
            << ", execution calls: " << t.metrics.execution_calls
            << ", tokens out: " << t.metrics.tokens_out_total << "\n";
  if (t.outcome == Outcome::Aborted)
    std::cout << "abort reason: " << t.abort_reason << "\n";
  return 0;
}

inline int cmd_run_corpus(const GlobalOptions& opts,
                          const std::string& corpus_path,
                          const std::string& variant_name_str, int reps,
                          std::uint64_t seed_override, bool has_seed_override,
                          const std::string& transcripts_out,
                          const std::string& report_json_out,
                          const std::string& report_md_out) {
  std::ifstream in(corpus_path);
  if (!in) throw ConfigError("cannot open corpus file: " + corpus_path);
  Corpus corpus = corpus_from_json(Json::parse(in));
  if (has_seed_override) corpus.corpus_seed = seed_override;

  auto variant = variant_from_name(variant_name_str);
  if (!variant) throw ConfigError("unknown variant: " + variant_name_str);

  RunCorpusResult result =
      run_corpus(corpus, *variant, reps, make_factory(opts), opts.backend.kind,
                 opts.p_fail, opts.concurrency);

  if (!transcripts_out.empty()) {
    Json header = run_header_record(
        opts.backend.kind, opts.p_fail, corpus.corpus_seed, variant_name_str,
        reps, corpus.env, result.report.metadata.corpus_hash);
    write_transcripts(transcripts_out, header, result.transcripts);
  }
  if (!report_json_out.empty())
    write_file(report_json_out, emit_report(result.report, "json"));
  if (!report_md_out.empty())
    write_file(report_md_out, emit_report(result.report, "markdown"));
  std::cout << emit_report(result.report, "markdown");
  return 0;
}

inline int cmd_replay(const std::string& transcripts_path,
                      const std::string& transcripts_out,
                      const std::string& report_json_out,
                      const std::string& report_md_out) {
  std::vector<Json> records = read_jsonl_file(transcripts_path);
  std::optional<Environment> env;
  // The report describes the recorded run; replay is transport, not an
  // architecture, so the original backend label is kept.
  std::string backend_name = "replay";
  double p_fail = 0.0;
  std::uint64_t seed = 0;
  for (const auto& r : records) {
    if (r.value("type", "") == "run_header") {
      if (r.contains("env")) env = environment_from_json(r["env"]);
      backend_name = r.value("backend", backend_name);
      p_fail = r.value("p_fail", 0.0);
      seed = r.value("seed", std::uint64_t{0});
    }
  }
  std::vector<EpisodeTranscript> recorded = transcripts_from_records(records);
  if (recorded.empty()) throw ConfigError("no episodes in transcript file");
  if (!env) env = build_env(recorded.front().env_kind);

  BackendFactory factory = replay_backend_factory(recorded);
  std::vector<EpisodeTranscript> replayed(recorded.size());
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    const EpisodeTranscript& r = recorded[i];
    auto variant = variant_from_name(r.variant);
    if (!variant) throw ConfigError("unknown variant in transcript: " + r.variant);
    PipelineConfig config = variant_config(*variant);
    config.seed = r.seed;
    config.grasp_failure_prob = r.p_fail;
    config.timeout_factor = r.timeout_factor;
    PrimitiveRegistry registry = registry_for(*env, r.p_fail);
    EpisodeSetup setup;
    setup.env = &*env;
    setup.initial = r.initial;
    setup.episode_id = r.episode_id;
    RoleBackends backends = factory(setup);
    EpisodeTranscript t =
        *variant == Variant::Cap
            ? run_cap_episode(r.instruction, r.goal, *env, r.initial, registry,
                              config, backends)
            : run_episode(r.instruction, r.goal, *env, r.initial, registry,
                          config, backends);
    t.episode_id = r.episode_id;
    t.task_index = r.task_index;
    t.repetition = r.repetition;
    t.variant = r.variant;
    replayed[i] = std::move(t);
  }

  BenchMetadata metadata;
  metadata.seed = seed;
  metadata.backend = backend_name;
  metadata.p_fail = p_fail;
  metadata.corpus_hash = "";
  for (const auto& r : records)
    if (r.value("type", "") == "run_header" && r.contains("corpus_hash"))
      metadata.corpus_hash = r["corpus_hash"].get<std::string>();
  BenchReport report = report_from_transcripts(replayed, metadata);

  if (!transcripts_out.empty()) {
    Json header =
        run_header_record(backend_name, p_fail, seed, replayed.front().variant,
                          0, *env, metadata.corpus_hash);
    write_transcripts(transcripts_out, header, replayed);
  }
  if (!report_json_out.empty())
    write_file(report_json_out, emit_report(report, "json"));
  if (!report_md_out.empty())
    write_file(report_md_out, emit_report(report, "markdown"));
  std::cout << emit_report(report, "markdown");
  return 0;
}

inline int cmd_classify(const std::string& transcripts_path,
                        const std::string& corpus_path,
                        const std::string& out_path) {
  std::vector<EpisodeTranscript> transcripts =
      transcripts_from_records(read_jsonl_file(transcripts_path));
  std::optional<Corpus> corpus;
  if (!corpus_path.empty()) {
    std::ifstream in(corpus_path);
    if (!in) throw ConfigError("cannot open corpus file: " + corpus_path);
    corpus = corpus_from_json(Json::parse(in));
  }
  std::string csv = labels_csv(transcripts, corpus ? &*corpus : nullptr);
  if (out_path.empty())
    std::cout << csv;
  else
    write_file(out_path, csv);
  return 0;
}

inline int cmd_verify_chain(const std::string& chain_path) {
  std::ifstream in(chain_path);
  if (!in) throw ConfigError("cannot open chain file: " + chain_path);
  Json j = Json::parse(in);
  Environment env = j.contains("env") ? environment_from_json(j["env"])
                                      : env_by_name(j.value("env_kind", "service"));
  WorldState initial = j.contains("initial") && !j["initial"].is_null()
                           ? world_state_from_json(j["initial"])
                           : env.initial;
  std::vector<PrimitiveCall> chain;
  for (const auto& jc : j.at("chain")) {
    PrimitiveCall c;
    c.name = jc.at("name").get<std::string>();
    c.args = jc.at("args").get<std::vector<std::string>>();
    chain.push_back(c);
  }
  double p_fail = j.value("p_fail", 0.0);
  PrimitiveRegistry registry = registry_for(env, p_fail);
  ChainCheckResult result = verify_chain(registry, env, chain, initial);
  if (!result.error.empty()) {
    std::cerr << "error: " << result.error << "\n";
    return 2;
  }
  if (!result.ok) {
    std::cout << "violation at index " << result.violation_index << ": "
              << result.violation_message << "\n";
    return 1;
  }
  std::cout << "chain ok (" << chain.size() << " steps)\n";
  return 0;
}

inline int cmd_report(const std::vector<std::string>& transcript_paths,
                      const std::string& format, const std::string& out_path) {
  std::vector<EpisodeTranscript> all;
  BenchMetadata metadata;
  metadata.backend = "mixed";
  for (const auto& path : transcript_paths) {
    std::vector<Json> records = read_jsonl_file(path);
    for (const auto& r : records) {
      if (r.value("type", "") == "run_header") {
        metadata.backend = r.value("backend", metadata.backend);
        metadata.p_fail = r.value("p_fail", metadata.p_fail);
        metadata.seed = r.value("seed", metadata.seed);
      }
    }
    for (auto& t : transcripts_from_records(records)) all.push_back(std::move(t));
  }
  BenchReport report = report_from_transcripts(all, metadata);
  std::string rendered = emit_report(report, format);
  if (out_path.empty())
    std::cout << rendered;
  else
    write_file(out_path, rendered);
  return 0;
}

}  // namespace cli

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"options-based plan/execute/feedback pipeline over a symbolic "
               "robot simulator"};
  app.require_subcommand(1);

  cli::GlobalOptions opts;
  app.add_option("--config", opts.config_file, "JSON config file");
  auto* opt_backend =
      app.add_option("--backend", opts.backend.kind,
                     "backend: oracle | http | replay | unparseable");
  auto* opt_base_url =
      app.add_option("--base-url", opts.backend.http.base_url,
                     "chat completions base URL");
  auto* opt_model = app.add_option("--model", opts.backend.http.model, "model name");
  auto* opt_path =
      app.add_option("--http-path", opts.backend.http.path, "chat completions path");
  auto* opt_timeout =
      app.add_option("--http-timeout", opts.backend.http.timeout_s, "HTTP timeout (s)");
  auto* opt_p_fail =
      app.add_option("--p-fail", opts.p_fail, "grasp failure probability");
  auto* opt_timeout_factor =
      app.add_option("--timeout-factor", opts.timeout_factor,
                     "interaction budget = factor x plan length");
  auto* opt_concurrency =
      app.add_option("--concurrency", opts.concurrency, "parallel episodes");
  app.add_option("--replay-transcripts", opts.replay_file,
                 "recorded transcripts for --backend replay");
  app.add_flag("--oracle-recover", opts.oracle.recover_on_feedback,
               "oracle recovers after error feedback");
  app.add_flag("--oracle-omit-move", opts.oracle.omit_move_before_grasp,
               "oracle fault: omit move calls");
  app.add_flag("--oracle-omit-part", opts.oracle.omit_grasp_part,
               "oracle fault: omit grasp part");
  app.add_flag("--oracle-omit-plan-step", opts.oracle.omit_plan_step,
               "oracle fault: drop the first move step from the plan");
  app.add_flag("--oracle-unparseable-once", opts.oracle.emit_unparseable_once,
               "oracle fault: emit one unparseable completion");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a task corpus");
  std::string gen_env = "service";
  std::size_t gen_n = 50;
  std::uint64_t gen_seed = 7;
  std::string gen_out = "corpus.json";
  bool gen_paraphrase = false;
  gen->add_option("--env", gen_env, "service | taskboard");
  gen->add_option("-n,--count", gen_n, "number of tasks");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("-o,--out", gen_out, "output file");
  gen->add_flag("--paraphrase", gen_paraphrase,
                "replace variants 1-2 with backend paraphrases");

  // run-task
  auto* rt = app.add_subcommand("run-task", "run a single episode");
  std::string rt_instruction, rt_corpus, rt_variant = "full", rt_out;
  std::string rt_env = "service", rt_fixture;
  int rt_task_id = -1, rt_instruction_variant = 0;
  std::uint64_t rt_seed = 0;
  rt->add_option("--instruction", rt_instruction, "raw task instruction");
  rt->add_option("--corpus", rt_corpus, "corpus file");
  rt->add_option("--task-id", rt_task_id, "task index within the corpus");
  rt->add_option("--instruction-variant", rt_instruction_variant,
                 "instruction variant index (corpus tasks)");
  rt->add_option("--fixture", rt_fixture,
                 "industrial fixture: charger | probe-rack | taskboard");
  rt->add_option("--env", rt_env, "service | taskboard");
  rt->add_option("--variant", rt_variant, "cap | plan | eo | fb | full");
  rt->add_option("--seed", rt_seed, "episode seed");
  rt->add_option("-o,--out", rt_out, "transcript output file");

  // run-corpus
  auto* rc = app.add_subcommand("run-corpus", "run a corpus under a variant");
  std::string rc_corpus, rc_variant = "full", rc_out, rc_report_json,
              rc_report_md;
  int rc_reps = 3;
  std::uint64_t rc_seed = 0;
  bool rc_seed_set = false;
  rc->add_option("--corpus", rc_corpus, "corpus file")->required();
  rc->add_option("--variant", rc_variant, "cap | plan | eo | fb | full");
  rc->add_option("--reps", rc_reps, "repetitions (instruction sets)");
  rc->add_option("--seed", rc_seed, "override the corpus seed")
      ->each([&](const std::string&) { rc_seed_set = true; });
  rc->add_option("-o,--transcripts", rc_out, "transcripts output (jsonl)");
  rc->add_option("--report-json", rc_report_json, "report output (json)");
  rc->add_option("--report-md", rc_report_md, "report output (markdown)");

  // replay
  auto* rp = app.add_subcommand("replay", "re-run recorded transcripts");
  std::string rp_transcripts, rp_out, rp_report_json, rp_report_md;
  rp->add_option("--transcripts", rp_transcripts, "recorded transcripts")
      ->required();
  rp->add_option("-o,--out", rp_out, "replayed transcripts output");
  rp->add_option("--report-json", rp_report_json, "report output (json)");
  rp->add_option("--report-md", rp_report_md, "report output (markdown)");

  // classify
  auto* cl = app.add_subcommand("classify", "label failed episodes");
  std::string cl_transcripts, cl_corpus, cl_out;
  cl->add_option("--transcripts", cl_transcripts, "transcripts file")
      ->required();
  cl->add_option("--corpus", cl_corpus, "corpus file (pick-and-place chains)");
  cl->add_option("-o,--out", cl_out, "labels CSV output");

  // verify-chain
  auto* vc = app.add_subcommand("verify-chain", "check option chaining");
  std::string vc_chain;
  vc->add_option("--chain", vc_chain, "chain file (json)")->required();

  // report
  auto* rep = app.add_subcommand("report", "aggregate transcripts");
  std::vector<std::string> rep_transcripts;
  std::string rep_format = "markdown", rep_out;
  rep->add_option("--transcripts", rep_transcripts, "transcripts files")
      ->required();
  rep->add_option("--format", rep_format, "json | markdown");
  rep->add_option("-o,--out", rep_out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    // precedence: explicit flags > env vars > config file > defaults
    cli::GlobalOptions flags = opts;
    cli::load_config_file(opts);
    cli::apply_env_overrides(opts);
    if (opt_backend->count() > 0) opts.backend.kind = flags.backend.kind;
    if (opt_base_url->count() > 0) opts.backend.http.base_url = flags.backend.http.base_url;
    if (opt_model->count() > 0) opts.backend.http.model = flags.backend.http.model;
    if (opt_path->count() > 0) opts.backend.http.path = flags.backend.http.path;
    if (opt_timeout->count() > 0) opts.backend.http.timeout_s = flags.backend.http.timeout_s;
    if (opt_p_fail->count() > 0) opts.p_fail = flags.p_fail;
    if (opt_timeout_factor->count() > 0)
      opts.timeout_factor = flags.timeout_factor;
    if (opt_concurrency->count() > 0) opts.concurrency = flags.concurrency;

    if (gen->parsed())
      return cli::cmd_gen_corpus(opts, gen_env, gen_n, gen_seed, gen_out,
                                 gen_paraphrase);

    if (rt->parsed()) {
      auto variant = variant_from_name(rt_variant);
      if (!variant) throw ConfigError("unknown variant: " + rt_variant);
      if (!rt_fixture.empty()) {
        Environment env = build_taskboard_env();
        TaskSpec task;
        if (rt_fixture == "charger")
          task = charger_task();
        else if (rt_fixture == "probe-rack")
          task = probe_rack_task();
        else if (rt_fixture == "taskboard")
          task = taskboard_task();
        else
          throw ConfigError("unknown fixture: " + rt_fixture);
        std::string instruction =
            task.instructions[static_cast<std::size_t>(rt_instruction_variant) %
                              task.instructions.size()];
        return cli::run_one_task(opts, env, task, instruction, *variant,
                                 rt_seed, rt_out);
      }
      if (!rt_corpus.empty()) {
        std::ifstream in(rt_corpus);
        if (!in) throw ConfigError("cannot open corpus file: " + rt_corpus);
        Corpus corpus = corpus_from_json(Json::parse(in));
        if (rt_task_id < 0 ||
            rt_task_id >= static_cast<int>(corpus.tasks.size()))
          throw ConfigError("task id out of range");
        const TaskSpec& task =
            corpus.tasks[static_cast<std::size_t>(rt_task_id)];
        std::string instruction =
            task.instructions[static_cast<std::size_t>(rt_instruction_variant) %
                              task.instructions.size()];
        return cli::run_one_task(opts, corpus.env, task, instruction, *variant,
                                 rt_seed, rt_out);
      }
      if (rt_instruction.empty())
        throw ConfigError(
            "run-task needs --instruction, --corpus + --task-id, or "
            "--fixture");
      Environment env = cli::env_by_name(rt_env);
      if (env.kind == EnvKind::Industrial)
        throw ConfigError(
            "raw instructions on the taskboard env are not supported; use "
            "--fixture");
      auto derived = cli::derive_service_task(env, rt_instruction);
      if (!derived)
        throw ConfigError(
            "could not derive object/source/target from the instruction");
      TaskSpec task;
      task.object = derived->object;
      task.source = derived->source;
      task.target = derived->target;
      task.instructions = {rt_instruction, rt_instruction, rt_instruction};
      task.goal = object_at_goal(task.object, task.target);
      task.seed = rt_seed;
      return cli::run_one_task(opts, env, task, rt_instruction, *variant,
                               rt_seed, rt_out);
    }

    if (rc->parsed())
      return cli::cmd_run_corpus(opts, rc_corpus, rc_variant, rc_reps, rc_seed,
                                 rc_seed_set, rc_out, rc_report_json,
                                 rc_report_md);
    if (rp->parsed())
      return cli::cmd_replay(rp_transcripts, rp_out, rp_report_json,
                             rp_report_md);
    if (cl->parsed()) return cli::cmd_classify(cl_transcripts, cl_corpus, cl_out);
    if (vc->parsed()) return cli::cmd_verify_chain(vc_chain);
    if (rep->parsed())
      return cli::cmd_report(rep_transcripts, rep_format, rep_out);
    throw ConfigError("no subcommand given");
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace planloop
