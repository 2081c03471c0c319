#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "planloop/gateway.hpp"
#include "planloop/orchestrator.hpp"
#include "planloop/world.hpp"

namespace planloop {

// Episode transcripts are JSON lines: a header record, one generation
// record per planner/eo completion, one record per interaction, and a
// footer. The same file is the input of the replay backend, of failure
// classification, and of report aggregation.

namespace detail {

inline const char* twin_status_name(TwinResult::Status s) {
  switch (s) {
    case TwinResult::Status::Ok: return "ok";
    case TwinResult::Status::Rejected: return "rejected";
    case TwinResult::Status::Bypassed: return "bypassed";
  }
  return "?";
}

inline TwinResult::Status twin_status_from(const std::string& s) {
  if (s == "rejected") return TwinResult::Status::Rejected;
  if (s == "bypassed") return TwinResult::Status::Bypassed;
  return TwinResult::Status::Ok;
}

inline const char* outcome_kind_name(ExecOutcome::Kind k) {
  switch (k) {
    case ExecOutcome::Kind::Success: return "success";
    case ExecOutcome::Kind::PreconditionViolation:
      return "precondition_violation";
    case ExecOutcome::Kind::ArgumentError: return "argument_error";
    case ExecOutcome::Kind::StochasticFailure: return "stochastic_failure";
  }
  return "?";
}

inline ExecOutcome::Kind outcome_kind_from(const std::string& s) {
  if (s == "precondition_violation")
    return ExecOutcome::Kind::PreconditionViolation;
  if (s == "argument_error") return ExecOutcome::Kind::ArgumentError;
  if (s == "stochastic_failure") return ExecOutcome::Kind::StochasticFailure;
  return ExecOutcome::Kind::Success;
}

inline Json call_to_json(const PrimitiveCall& c) {
  Json j;
  j["name"] = c.name;
  j["args"] = c.args;
  return j;
}

inline PrimitiveCall call_from_json(const Json& j) {
  PrimitiveCall c;
  c.name = j.at("name").get<std::string>();
  c.args = j.at("args").get<std::vector<std::string>>();
  return c;
}

}  // namespace detail

inline std::vector<Json> transcript_to_records(const EpisodeTranscript& t) {
  std::vector<Json> records;

  Json header;
  header["type"] = "episode_header";
  header["episode_id"] = t.episode_id;
  header["task_index"] = t.task_index;
  header["repetition"] = t.repetition;
  header["instruction"] = t.instruction;
  header["variant"] = t.variant;
  header["seed"] = t.seed;
  header["p_fail"] = t.p_fail;
  header["timeout_factor"] = t.timeout_factor;
  header["env_kind"] = t.env_kind == EnvKind::Service ? "service" : "industrial";
  header["goal"] = to_json(t.goal);
  header["initial"] = to_json(t.initial);
  header["plan"] = t.plan;
  Json eos = Json::array();
  for (const auto& [k, v] : t.eos) eos.push_back(Json::array({k, v}));
  header["eos"] = eos;
  header["notes"] = t.notes;
  records.push_back(header);

  for (const auto& g : t.generations) {
    Json j;
    j["type"] = "generation";
    j["episode_id"] = t.episode_id;
    j["role"] = g.role;
    j["prompt_hash"] = g.prompt_hash;
    j["completion"] = g.completion;
    j["tokens_out"] = g.tokens_out;
    j["tokens_reported"] = g.tokens_reported;
    records.push_back(j);
  }

  for (const auto& ia : t.interactions) {
    Json j;
    j["type"] = "interaction";
    j["episode_id"] = t.episode_id;
    j["index"] = ia.index;
    j["plan_step_index"] = ia.plan_step_index;
    j["prompt_hash"] = ia.prompt_hash;
    j["completion"] = ia.completion;
    j["tokens_out"] = ia.tokens_out;
    j["tokens_reported"] = ia.tokens_reported;
    if (ia.parse_error)
      j["parse_error"] = *ia.parse_error;
    else
      j["parse_error"] = nullptr;
    Json calls = Json::array();
    for (const auto& c : ia.calls) calls.push_back(detail::call_to_json(c));
    j["calls"] = calls;
    Json twin;
    twin["status"] = detail::twin_status_name(ia.twin.status);
    twin["reject_index"] = ia.twin.reject_index;
    twin["rule"] = ia.twin.rule;
    twin["message"] = ia.twin.message;
    j["twin"] = twin;
    Json env_results = Json::array();
    for (const auto& r : ia.env_results) {
      Json jr;
      jr["call"] = detail::call_to_json(r.call);
      jr["kind"] = detail::outcome_kind_name(r.kind);
      jr["rule"] = r.rule;
      jr["message"] = r.message;
      env_results.push_back(jr);
    }
    j["env_results"] = env_results;
    Json fb;
    fb["done"] = ia.feedback.done;
    fb["error_message"] = ia.feedback.error_message;
    fb["robot_at"] = ia.feedback.robot_at;
    fb["gripper"] = ia.feedback.gripper_contents;
    fb["remaining_plan"] = ia.feedback.remaining_plan;
    if (ia.feedback.current_eo)
      fb["current_eo"] = *ia.feedback.current_eo;
    else
      fb["current_eo"] = nullptr;
    j["feedback"] = fb;
    j["step_removed"] = ia.step_removed;
    records.push_back(j);
  }

  Json footer;
  footer["type"] = "episode_footer";
  footer["episode_id"] = t.episode_id;
  footer["outcome"] = outcome_name(t.outcome);
  footer["abort_reason"] = t.abort_reason;
  footer["execution_calls"] = t.metrics.execution_calls;
  footer["tokens_out_total"] = t.metrics.tokens_out_total;
  footer["wall_time_s"] = t.metrics.wall_time_s;
  footer["final_state"] = to_json(t.final_state);
  records.push_back(footer);
  return records;
}

inline void append_transcript(std::ostream& out, const EpisodeTranscript& t) {
  for (const auto& record : transcript_to_records(t))
    out << record.dump() << "\n";
}

inline std::vector<EpisodeTranscript> transcripts_from_records(
    const std::vector<Json>& records) {
  std::vector<EpisodeTranscript> transcripts;
  std::map<std::string, std::size_t> index;

  auto episode = [&](const Json& j) -> EpisodeTranscript& {
    std::string id = j.value("episode_id", "");
    auto it = index.find(id);
    if (it == index.end()) {
      index[id] = transcripts.size();
      transcripts.emplace_back();
      transcripts.back().episode_id = id;
      return transcripts.back();
    }
    return transcripts[it->second];
  };

  for (const auto& j : records) {
    std::string type = j.value("type", "");
    if (type == "episode_header") {
      EpisodeTranscript& t = episode(j);
      t.task_index = j.value("task_index", -1);
      t.repetition = j.value("repetition", -1);
      t.instruction = j.value("instruction", "");
      t.variant = j.value("variant", "");
      t.seed = j.value("seed", std::uint64_t{0});
      t.p_fail = j.value("p_fail", 0.0);
      t.timeout_factor = j.value("timeout_factor", 2.0);
      t.env_kind = j.value("env_kind", "service") == "industrial"
                       ? EnvKind::Industrial
                       : EnvKind::Service;
      if (j.contains("goal")) t.goal = goal_from_json(j["goal"]);
      if (j.contains("initial")) t.initial = world_state_from_json(j["initial"]);
      if (j.contains("plan"))
        t.plan = j["plan"].get<std::vector<std::string>>();
      if (j.contains("eos"))
        for (const auto& pair : j["eos"])
          t.eos.emplace_back(pair.at(0).get<std::string>(),
                             pair.at(1).get<std::string>());
      if (j.contains("notes"))
        t.notes = j["notes"].get<std::vector<std::string>>();
    } else if (type == "generation") {
      EpisodeTranscript& t = episode(j);
      GenerationView g;
      g.role = j.value("role", "");
      g.prompt_hash = j.value("prompt_hash", "");
      g.completion = j.value("completion", "");
      g.tokens_out = j.value("tokens_out", 0);
      g.tokens_reported = j.value("tokens_reported", false);
      t.generations.push_back(g);
    } else if (type == "interaction") {
      EpisodeTranscript& t = episode(j);
      Interaction ia;
      ia.index = j.value("index", 0);
      ia.plan_step_index = j.value("plan_step_index", -1);
      ia.prompt_hash = j.value("prompt_hash", "");
      ia.completion = j.value("completion", "");
      ia.tokens_out = j.value("tokens_out", 0);
      ia.tokens_reported = j.value("tokens_reported", false);
      if (j.contains("parse_error") && !j["parse_error"].is_null())
        ia.parse_error = j["parse_error"].get<std::string>();
      for (const auto& c : j.value("calls", Json::array()))
        ia.calls.push_back(detail::call_from_json(c));
      if (j.contains("twin")) {
        ia.twin.status =
            detail::twin_status_from(j["twin"].value("status", "ok"));
        ia.twin.reject_index = j["twin"].value("reject_index", -1);
        ia.twin.rule = j["twin"].value("rule", "");
        ia.twin.message = j["twin"].value("message", "");
      }
      for (const auto& jr : j.value("env_results", Json::array())) {
        EnvCallResult r;
        r.call = detail::call_from_json(jr.at("call"));
        r.kind = detail::outcome_kind_from(jr.value("kind", "success"));
        r.rule = jr.value("rule", "");
        r.message = jr.value("message", "");
        ia.env_results.push_back(r);
      }
      if (j.contains("feedback")) {
        const Json& fb = j["feedback"];
        ia.feedback.done = fb.value("done", true);
        ia.feedback.error_message = fb.value("error_message", "");
        ia.feedback.robot_at = fb.value("robot_at", "");
        ia.feedback.gripper_contents = fb.value("gripper", "");
        ia.feedback.remaining_plan =
            fb.value("remaining_plan", std::vector<std::string>{});
        if (fb.contains("current_eo") && !fb["current_eo"].is_null())
          ia.feedback.current_eo = fb["current_eo"].get<std::string>();
      }
      ia.step_removed = j.value("step_removed", false);
      t.interactions.push_back(std::move(ia));
    } else if (type == "episode_footer") {
      EpisodeTranscript& t = episode(j);
      std::string outcome = j.value("outcome", "Timeout");
      t.outcome = outcome == "Success"  ? Outcome::Success
                  : outcome == "Aborted" ? Outcome::Aborted
                                         : Outcome::Timeout;
      t.abort_reason = j.value("abort_reason", "");
      t.metrics.execution_calls = j.value("execution_calls", 0);
      t.metrics.tokens_out_total = j.value("tokens_out_total", 0L);
      t.metrics.wall_time_s = j.value("wall_time_s", 0.0);
      if (j.contains("final_state"))
        t.final_state = world_state_from_json(j["final_state"]);
    }
  }
  return transcripts;
}

inline std::vector<Json> read_jsonl(std::istream& in) {
  std::vector<Json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    records.push_back(Json::parse(line));
  }
  return records;
}

inline std::vector<Json> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transcript file: " + path);
  return read_jsonl(in);
}

// The replay stream of one episode: planner and eo generations first, then
// the executor completions, in emission order.
inline std::vector<ReplayRecord> replay_records_for(
    const EpisodeTranscript& t) {
  std::vector<ReplayRecord> records;
  for (const auto& g : t.generations)
    records.push_back(
        {g.prompt_hash, g.completion, g.tokens_out, g.tokens_reported});
  for (const auto& ia : t.interactions)
    records.push_back(
        {ia.prompt_hash, ia.completion, ia.tokens_out, ia.tokens_reported});
  return records;
}

}  // namespace planloop
