#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "planloop/orchestrator.hpp"
#include "planloop/primitives.hpp"
#include "planloop/taskgen.hpp"
#include "planloop/world.hpp"

namespace planloop {

// --- option chaining -----------------------------------------------------------

struct ChainCheckResult {
  bool ok = false;
  int violation_index = -1;
  std::string violation_message;
  std::string error;  // unknown primitive etc., distinct from a violation

  static ChainCheckResult pass() {
    ChainCheckResult r;
    r.ok = true;
    return r;
  }
};

// Verifies that every successful outcome state of step i affords step i+1,
// by enumerating the outcome sets reachable along the chain (the symbolic
// state space along a chain is finite and small; an unparameterized grasp
// of a multi-part object forks one state per part).
inline ChainCheckResult verify_chain(const PrimitiveRegistry& registry,
                                     const Environment& env,
                                     const std::vector<PrimitiveCall>& chain,
                                     const WorldState& initial) {
  std::vector<WorldState> states{initial};
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const PrimitiveSpec* spec = registry.find(chain[i].name);
    if (spec == nullptr) {
      ChainCheckResult r;
      r.error = "unknown primitive '" + chain[i].name + "'";
      return r;
    }
    std::vector<WorldState> next;
    for (const auto& state : states) {
      Precheck check = check_precondition(*spec, env, state, chain[i].args);
      if (!check.ok()) {
        ChainCheckResult r;
        r.violation_index = static_cast<int>(i);
        r.violation_message = check.message;
        return r;
      }
      for (auto& outcome : spec->success_outcomes(env, state, chain[i].args)) {
        if (std::find(next.begin(), next.end(), outcome) == next.end())
          next.push_back(std::move(outcome));
      }
    }
    states = std::move(next);
  }
  return ChainCheckResult::pass();
}

// --- failure taxonomy ------------------------------------------------------------

struct FailureLabel {
  enum class Kind {
    MissingSubgoal,
    MischaracterizedSubgoal,
    PrimitiveFailureUnrecovered,
    CodeError,
    Other
  };
  Kind kind = Kind::Other;
  std::string evidence;  // interaction index + rule
};

inline const char* failure_label_name(FailureLabel::Kind k) {
  switch (k) {
    case FailureLabel::Kind::MissingSubgoal: return "MissingSubgoal";
    case FailureLabel::Kind::MischaracterizedSubgoal:
      return "MischaracterizedSubgoal";
    case FailureLabel::Kind::PrimitiveFailureUnrecovered:
      return "PrimitiveFailureUnrecovered";
    case FailureLabel::Kind::CodeError: return "CodeError";
    case FailureLabel::Kind::Other: return "Other";
  }
  return "?";
}

namespace detail {

// The primitive that would have fixed a given violation. Part divergences
// are deliberately absent: a wrong-part grasp is a parameter
// mischaracterization, not a missing step.
inline std::optional<std::string> fixing_primitive(const std::string& rule) {
  if (rule == "not_colocated" || rule == "not_at_location") return "move_to";
  if (rule == "not_holding") return "grasp";
  if (rule == "gripper_occupied") return "put_down";
  return std::nullopt;
}

}  // namespace detail

// Decision rules, first match wins:
//   (a) CodeError — a majority of interactions ended in parse errors;
//   (b) MissingSubgoal — a precondition violation whose fixing primitive is
//       in the GTSG but was never emitted for that plan step (and did not
//       stochastically fail earlier);
//   (c) MischaracterizedSubgoal — a grasp parameter diverges from the GTSG
//       (wrong or absent part) with the goal unmet;
//   (d) PrimitiveFailureUnrecovered — a stochastic failure with no later
//       retry of the failed primitive;
//   (e) Other.
inline FailureLabel classify_failure(const EpisodeTranscript& transcript,
                                     const std::vector<PrimitiveCall>& gtsg) {
  FailureLabel label;

  // (a)
  std::size_t parse_errors = 0;
  for (const auto& ia : transcript.interactions)
    if (ia.parse_error) ++parse_errors;
  if (!transcript.interactions.empty() &&
      parse_errors * 2 > transcript.interactions.size()) {
    label.kind = FailureLabel::Kind::CodeError;
    label.evidence = std::to_string(parse_errors) + " of " +
                     std::to_string(transcript.interactions.size()) +
                     " interactions unparseable";
    return label;
  }

  auto gtsg_has = [&](const std::string& name) {
    for (const auto& c : gtsg)
      if (c.name == name) return true;
    return false;
  };
  auto stochastic_failure_before = [&](const std::string& name,
                                       int interaction_index) {
    for (const auto& ia : transcript.interactions) {
      if (ia.index > interaction_index) break;
      for (const auto& r : ia.env_results)
        if (r.kind == ExecOutcome::Kind::StochasticFailure &&
            r.call.name == name)
          return true;
    }
    return false;
  };
  auto emitted_for_step = [&](int step_index, const std::string& name) {
    for (const auto& ia : transcript.interactions) {
      if (ia.plan_step_index != step_index) continue;
      for (const auto& c : ia.calls)
        if (c.name == name) return true;
    }
    return false;
  };

  // (b)
  for (const auto& ia : transcript.interactions) {
    std::vector<std::pair<std::string, std::string>> violations;
    if (ia.twin.status == TwinResult::Status::Rejected &&
        ia.twin.rule != "parse_error")
      violations.emplace_back(ia.twin.rule, ia.twin.message);
    for (const auto& r : ia.env_results)
      if (r.kind == ExecOutcome::Kind::PreconditionViolation)
        violations.emplace_back(r.rule, r.message);
    for (const auto& [rule, message] : violations) {
      auto fix = detail::fixing_primitive(rule);
      if (!fix || !gtsg_has(*fix)) continue;
      if (emitted_for_step(ia.plan_step_index, *fix)) continue;
      if (stochastic_failure_before(*fix, ia.index)) continue;
      label.kind = FailureLabel::Kind::MissingSubgoal;
      label.evidence = "interaction " + std::to_string(ia.index) + ": " +
                       message + " (missing " + *fix + ")";
      return label;
    }
  }

  // (c)
  for (const auto& ia : transcript.interactions) {
    for (const auto& c : ia.calls) {
      if (c.name != "grasp") continue;
      for (const auto& g : gtsg) {
        if (g.name != "grasp" || g.args.empty() || c.args.empty() ||
            g.args[0] != c.args[0] || g.args.size() < 2)
          continue;
        bool diverges = c.args.size() < 2 || c.args[1] != g.args[1];
        if (diverges) {
          label.kind = FailureLabel::Kind::MischaracterizedSubgoal;
          label.evidence = "interaction " + std::to_string(ia.index) +
                           ": grasp(" + c.args[0] + ") diverges from the " +
                           g.args[1] + " part";
          return label;
        }
      }
    }
  }

  // (d)
  for (const auto& ia : transcript.interactions) {
    for (const auto& r : ia.env_results) {
      if (r.kind != ExecOutcome::Kind::StochasticFailure) continue;
      bool retried = false;
      for (const auto& later : transcript.interactions) {
        if (later.index <= ia.index) continue;
        for (const auto& c : later.calls)
          if (c.name == r.call.name) retried = true;
      }
      if (!retried) {
        label.kind = FailureLabel::Kind::PrimitiveFailureUnrecovered;
        label.evidence = "interaction " + std::to_string(ia.index) + ": " +
                         r.message + " (never retried)";
        return label;
      }
    }
  }

  label.kind = FailureLabel::Kind::Other;
  label.evidence = "no rule matched";
  return label;
}

// GTSG for a recorded episode: pick-and-place chains come from the corpus,
// industrial chains from the instruction.
inline std::vector<PrimitiveCall> gtsg_for_transcript(
    const EpisodeTranscript& transcript, const Corpus* corpus) {
  if (transcript.env_kind == EnvKind::Industrial) {
    const std::string& task = transcript.instruction;
    if (contains(task, "board") && !contains(task, "charger"))
      return taskboard_chain();
    if (contains(task, "charger")) return charger_chain();
    if (contains(task, "probe")) return probe_rack_chain();
    return {};
  }
  if (corpus != nullptr && transcript.task_index >= 0 &&
      transcript.task_index < static_cast<int>(corpus->tasks.size()))
    return ground_truth_chain(
        corpus->tasks[static_cast<std::size_t>(transcript.task_index)]);
  return {};
}

inline std::string csv_field(const std::string& value) {
  bool needs_quotes = value.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quotes) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

inline std::string labels_csv(const std::vector<EpisodeTranscript>& transcripts,
                              const Corpus* corpus) {
  std::ostringstream out;
  out << "episode_id,task_index,repetition,outcome,label,evidence\n";
  for (const auto& t : transcripts) {
    std::string label = "";
    std::string evidence = "";
    if (t.outcome != Outcome::Success) {
      FailureLabel l = classify_failure(t, gtsg_for_transcript(t, corpus));
      label = failure_label_name(l.kind);
      evidence = l.evidence;
    }
    out << csv_field(t.episode_id) << "," << t.task_index << ","
        << t.repetition << "," << outcome_name(t.outcome) << ","
        << csv_field(label) << "," << csv_field(evidence) << "\n";
  }
  return out.str();
}

}  // namespace planloop
