#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "planloop/gateway.hpp"
#include "planloop/parser.hpp"
#include "planloop/primitives.hpp"
#include "planloop/prompts.hpp"
#include "planloop/world.hpp"

namespace planloop {

enum class Variant { Cap, Plan, Eo, Fb, Full };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Cap: return "cap";
    case Variant::Plan: return "plan";
    case Variant::Eo: return "eo";
    case Variant::Fb: return "fb";
    case Variant::Full: return "full";
  }
  return "?";
}

inline std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "cap") return Variant::Cap;
  if (name == "plan") return Variant::Plan;
  if (name == "eo") return Variant::Eo;
  if (name == "fb") return Variant::Fb;
  if (name == "full") return Variant::Full;
  return std::nullopt;
}

struct PipelineConfig {
  bool use_planner = true;
  bool use_eo = true;
  bool use_feedback = true;
  bool single_shot = false;  // one prompt, one program, open loop
  double timeout_factor = 2.0;
  double grasp_failure_prob = 0.10;
  std::uint64_t seed = 0;

  void validate() const {
    if (single_shot && (use_planner || use_eo || use_feedback))
      throw ConfigError("single_shot excludes planner/eo/feedback flags");
    if (timeout_factor <= 0) throw ConfigError("timeout_factor must be > 0");
    if (grasp_failure_prob < 0 || grasp_failure_prob > 1)
      throw ConfigError("grasp_failure_prob must be in [0,1]");
  }
};

inline PipelineConfig variant_config(Variant v) {
  PipelineConfig c;
  switch (v) {
    case Variant::Cap:
      c.use_planner = c.use_eo = c.use_feedback = false;
      c.single_shot = true;
      break;
    case Variant::Plan:
      c.use_eo = c.use_feedback = false;
      break;
    case Variant::Eo:
      c.use_feedback = false;
      break;
    case Variant::Fb:
      c.use_eo = false;
      break;
    case Variant::Full:
      break;
  }
  return c;
}

struct RoleBackends {
  std::shared_ptr<Backend> planner;
  std::shared_ptr<Backend> eo;
  std::shared_ptr<Backend> executor;
};

// --- per-interaction records ---------------------------------------------------

struct TwinResult {
  enum class Status { Ok, Rejected, Bypassed };
  Status status = Status::Ok;
  int reject_index = -1;
  std::string rule;
  std::string message;
};

struct EnvCallResult {
  PrimitiveCall call;
  ExecOutcome::Kind kind = ExecOutcome::Kind::Success;
  std::string rule;
  std::string message;
};

struct Feedback {
  bool done = true;
  std::string error_message;  // verbatim parser/precondition/stochastic text
  std::string robot_at;
  std::string gripper_contents;  // "empty" or object (+ part)
  std::vector<std::string> remaining_plan;
  std::optional<std::string> current_eo;
};

struct Interaction {
  int index = 0;
  int plan_step_index = -1;  // original index of the current step, -1 if none
  std::string prompt_hash;
  std::string completion;
  int tokens_out = 0;
  bool tokens_reported = false;
  std::optional<std::string> parse_error;
  std::vector<PrimitiveCall> calls;
  TwinResult twin;
  std::vector<EnvCallResult> env_results;
  Feedback feedback;
  bool step_removed = false;
};

enum class Outcome { Success, Timeout, Aborted };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Timeout: return "Timeout";
    case Outcome::Aborted: return "Aborted";
  }
  return "?";
}

struct GenerationView {
  std::string role;  // planner | eo | executor
  std::string prompt_hash;
  std::string completion;
  int tokens_out = 0;
  bool tokens_reported = false;
};

struct EpisodeMetrics {
  int execution_calls = 0;
  long tokens_out_total = 0;  // executor session only
  double wall_time_s = 0.0;
};

struct EpisodeTranscript {
  std::string episode_id;
  int task_index = -1;
  int repetition = -1;
  std::string instruction;
  std::string variant;
  std::uint64_t seed = 0;
  double p_fail = 0.0;
  double timeout_factor = 2.0;
  EnvKind env_kind = EnvKind::Service;
  GoalSpec goal;
  WorldState initial;
  std::vector<std::string> plan;
  std::vector<std::pair<std::string, std::string>> eos;
  std::vector<GenerationView> generations;  // planner/eo completions
  std::vector<Interaction> interactions;
  Outcome outcome = Outcome::Timeout;
  std::string abort_reason;
  EpisodeMetrics metrics;
  WorldState final_state;
  std::vector<std::string> notes;
};

// --- feedback composition --------------------------------------------------------

inline std::string describe_gripper(const WorldState& state) {
  if (!state.gripper) return "empty";
  std::string out = state.gripper->object;
  if (state.gripper->part) out += " (by the " + *state.gripper->part + " part)";
  return out;
}

inline Feedback compose_feedback(
    const TwinResult& twin, const std::vector<EnvCallResult>& env_results,
    const WorldState& state, const std::vector<std::string>& remaining_plan,
    const std::optional<std::string>& current_eo) {
  Feedback fb;
  fb.robot_at = state.robot_at;
  fb.gripper_contents = describe_gripper(state);
  fb.remaining_plan = remaining_plan;
  fb.current_eo = current_eo;
  if (twin.status == TwinResult::Status::Rejected) {
    fb.done = false;
    fb.error_message = twin.message;
    return fb;
  }
  for (const auto& r : env_results) {
    if (r.kind == ExecOutcome::Kind::Success) continue;
    fb.done = false;
    fb.error_message = r.message;
    break;
  }
  return fb;
}

inline std::string render_followup_prompt(const Feedback& fb,
                                          const WorldState& state,
                                          bool use_feedback) {
  PromptBindings b;
  if (use_feedback && !fb.done) b.feedback_error = fb.error_message;
  b.state_reminder = render_state_reminder(state);
  b.plan = fb.remaining_plan;
  b.current_eo = fb.current_eo;
  return render_prompt(PromptRole::ExecutorFollowup, b);
}

// --- episode runner ----------------------------------------------------------------

namespace detail {

struct StepQueue {
  std::vector<std::string> steps;
  std::vector<int> original_index;

  void init(const std::vector<std::string>& plan) {
    steps = plan;
    original_index.resize(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i)
      original_index[i] = static_cast<int>(i);
  }
  bool empty() const { return steps.empty(); }
  const std::string& head() const { return steps.front(); }
  int head_index() const { return original_index.empty() ? -1 : original_index.front(); }
  void pop() {
    if (steps.empty()) return;
    steps.erase(steps.begin());
    original_index.erase(original_index.begin());
  }
};

inline std::optional<std::string> eo_for_step(
    const std::vector<std::pair<std::string, std::string>>& eos,
    const StepQueue& queue) {
  if (queue.empty()) return std::nullopt;
  for (const auto& [step, eo] : eos)
    if (step == queue.head()) return eo;
  return std::nullopt;
}

// Runs one snippet in the environment, stochastic failures possible. State
// evolves through the successful calls; violated calls leave it unchanged.
inline std::vector<EnvCallResult> execute_in_env(
    const std::vector<PrimitiveCall>& calls, const Environment& env,
    const PrimitiveRegistry& registry, WorldState& state, Rng& rng) {
  std::vector<EnvCallResult> results;
  for (const auto& call : calls) {
    EnvCallResult r;
    r.call = call;
    const PrimitiveSpec* spec = registry.find(call.name);
    if (spec == nullptr) {
      r.kind = ExecOutcome::Kind::ArgumentError;
      r.rule = "unknown_primitive";
      r.message = "unknown primitive '" + call.name + "'";
      results.push_back(std::move(r));
      continue;
    }
    ExecOutcome outcome = execute(*spec, env, state, call.args, rng);
    r.kind = outcome.kind;
    r.rule = outcome.rule;
    r.message = outcome.message;
    if (outcome.kind == ExecOutcome::Kind::Success ||
        outcome.kind == ExecOutcome::Kind::StochasticFailure)
      state = outcome.state;
    results.push_back(std::move(r));
  }
  return results;
}

// Validates a snippet against a deterministic copy of the state:
// preconditions only, success effects assumed, no failure sampling. An
// unparameterized grasp of a multi-part object materializes the first
// catalog part (the copy is discarded after the interaction).
inline TwinResult run_twin(const std::vector<PrimitiveCall>& calls,
                           const Environment& env,
                           const PrimitiveRegistry& registry,
                           WorldState twin_state) {
  TwinResult result;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const PrimitiveSpec* spec = registry.find(calls[i].name);
    if (spec == nullptr) {
      result.status = TwinResult::Status::Rejected;
      result.reject_index = static_cast<int>(i);
      result.rule = "unknown_primitive";
      result.message = "unknown primitive '" + calls[i].name + "'";
      return result;
    }
    Precheck check = check_precondition(*spec, env, twin_state, calls[i].args);
    if (!check.ok()) {
      result.status = TwinResult::Status::Rejected;
      result.reject_index = static_cast<int>(i);
      result.rule = check.rule;
      result.message = check.message;
      return result;
    }
    twin_state = spec->success_outcomes(env, twin_state, calls[i].args)[0];
  }
  return result;
}

}  // namespace detail

inline EpisodeTranscript run_episode(const std::string& instruction,
                                     const GoalSpec& goal,
                                     const Environment& env,
                                     const WorldState& initial,
                                     const PrimitiveRegistry& registry,
                                     const PipelineConfig& config,
                                     const RoleBackends& backends) {
  config.validate();
  if (config.single_shot)
    throw ConfigError("run_episode does not take single_shot configs");

  auto start = std::chrono::steady_clock::now();
  EpisodeTranscript t;
  t.instruction = instruction;
  t.seed = config.seed;
  t.p_fail = config.grasp_failure_prob;
  t.timeout_factor = config.timeout_factor;
  t.env_kind = env.kind;
  t.goal = goal;
  t.initial = initial;

  WorldState state = initial;
  Rng rng(config.seed);
  std::string skills = skill_headers(registry);
  std::string environment_block = render_environment_block(env, initial);

  // 1. plan
  std::vector<std::string> plan;
  if (config.use_planner) {
    ChatSession planner{backends.planner};
    PromptBindings b;
    b.task = instruction;
    try {
      auto [completion, record] =
          send(planner, render_prompt(PromptRole::Planner, b));
      t.generations.push_back({"planner", record.prompt_hash, completion,
                               record.tokens_out, record.tokens_reported});
      auto parsed = parse_plan(completion);
      if (parsed.ok()) {
        plan = *parsed;
      } else {
        plan = {instruction};
        t.notes.push_back("plan_parse_fallback: " + parsed.error->message);
      }
    } catch (const std::runtime_error& e) {
      t.outcome = Outcome::Aborted;
      t.abort_reason = e.what();
      t.final_state = state;
      t.metrics.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      return t;
    }
  } else {
    plan = {instruction};
  }
  t.plan = plan;

  // 2. expected outcomes
  if (config.use_eo) {
    ChatSession eo_session{backends.eo};
    PromptBindings b;
    b.task = instruction;
    b.plan = plan;
    try {
      auto [completion, record] =
          send(eo_session, render_prompt(PromptRole::Eo, b));
      t.generations.push_back({"eo", record.prompt_hash, completion,
                               record.tokens_out, record.tokens_reported});
      auto parsed = parse_eo_map(completion, plan);
      if (parsed.ok()) {
        t.eos = *parsed;
      } else {
        t.notes.push_back("eo_parse_fallback: " + parsed.error->message);
      }
    } catch (const std::runtime_error& e) {
      t.outcome = Outcome::Aborted;
      t.abort_reason = e.what();
      t.final_state = state;
      t.metrics.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      return t;
    }
  }

  // 3. execution loop
  detail::StepQueue queue;
  queue.init(plan);
  std::size_t limit = static_cast<std::size_t>(config.timeout_factor *
                                               static_cast<double>(plan.size()));
  ChatSession executor{backends.executor};
  Feedback previous;
  bool first_turn = true;
  t.outcome = Outcome::Timeout;

  if (goal_satisfied(state, goal)) t.outcome = Outcome::Success;

  while (t.outcome == Outcome::Timeout &&
         t.interactions.size() < limit) {
    std::string prompt;
    if (first_turn) {
      PromptBindings b;
      b.task = instruction;
      b.plan = plan;
      b.skills = skills;
      b.environment = environment_block;
      b.include_eos = config.use_eo;
      if (config.use_eo) b.eos = t.eos;
      prompt = render_prompt(PromptRole::ExecutorInitial, b);
      first_turn = false;
    } else {
      prompt = render_followup_prompt(previous, state, config.use_feedback);
    }

    Interaction ia;
    ia.index = static_cast<int>(t.interactions.size());
    ia.plan_step_index = queue.head_index();
    try {
      auto [completion, record] = send(executor, prompt);
      ia.prompt_hash = record.prompt_hash;
      ia.completion = completion;
      ia.tokens_out = record.tokens_out;
      ia.tokens_reported = record.tokens_reported;
    } catch (const std::runtime_error& e) {
      t.outcome = Outcome::Aborted;
      t.abort_reason = e.what();
      break;
    }

    auto parsed = parse_tagged_snippet(ia.completion);
    if (!parsed.ok()) {
      ia.parse_error = parsed.error->message;
      ia.twin.status = TwinResult::Status::Bypassed;
      if (config.use_feedback) {
        // The parse error text becomes the feedback; nothing is executed
        // and the step stays.
        TwinResult twin;
        twin.status = TwinResult::Status::Rejected;
        twin.rule = "parse_error";
        twin.message = *ia.parse_error;
        ia.twin = twin;
        previous = compose_feedback(twin, {}, state, queue.steps,
                                    detail::eo_for_step(t.eos, queue));
      } else {
        ia.step_removed = !queue.empty();
        queue.pop();
        previous = compose_feedback({}, {}, state, queue.steps,
                                    detail::eo_for_step(t.eos, queue));
      }
      ia.feedback = previous;
      t.interactions.push_back(std::move(ia));
      continue;
    }
    ia.calls = parsed->calls;

    if (config.use_feedback) {
      ia.twin = detail::run_twin(ia.calls, env, registry, state);
      if (ia.twin.status == TwinResult::Status::Rejected) {
        previous = compose_feedback(ia.twin, {}, state, queue.steps,
                                    detail::eo_for_step(t.eos, queue));
        ia.feedback = previous;
        t.interactions.push_back(std::move(ia));
        continue;
      }
    } else {
      ia.twin.status = TwinResult::Status::Bypassed;
    }

    // Twin accepted (or bypassed): execute in the environment and remove
    // the current step. A stochastic failure does not restore the step; the
    // notice plus the state reminder lets the model re-attempt.
    ia.env_results =
        detail::execute_in_env(ia.calls, env, registry, state, rng);
    ia.step_removed = !queue.empty();
    queue.pop();

    TwinResult for_feedback = ia.twin;
    std::vector<EnvCallResult> env_for_feedback =
        config.use_feedback ? ia.env_results : std::vector<EnvCallResult>{};
    previous = compose_feedback(for_feedback, env_for_feedback, state,
                                queue.steps,
                                detail::eo_for_step(t.eos, queue));
    ia.feedback = previous;
    t.interactions.push_back(std::move(ia));

    if (goal_satisfied(state, goal)) t.outcome = Outcome::Success;
  }

  t.final_state = state;
  t.metrics.execution_calls = static_cast<int>(t.interactions.size());
  for (const auto& r : executor.records) t.metrics.tokens_out_total += r.tokens_out;
  t.metrics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return t;
}

// Code-as-policies baseline: one prompt, one completion, the whole program
// executed open loop.
inline EpisodeTranscript run_cap_episode(const std::string& instruction,
                                         const GoalSpec& goal,
                                         const Environment& env,
                                         const WorldState& initial,
                                         const PrimitiveRegistry& registry,
                                         const PipelineConfig& config,
                                         const RoleBackends& backends) {
  config.validate();
  if (!config.single_shot)
    throw ConfigError("run_cap_episode requires a single_shot config");

  auto start = std::chrono::steady_clock::now();
  EpisodeTranscript t;
  t.instruction = instruction;
  t.variant = variant_name(Variant::Cap);
  t.seed = config.seed;
  t.p_fail = config.grasp_failure_prob;
  t.timeout_factor = config.timeout_factor;
  t.env_kind = env.kind;
  t.goal = goal;
  t.initial = initial;

  WorldState state = initial;
  Rng rng(config.seed);

  PromptBindings b;
  b.task = instruction;
  b.skills = skill_headers(registry);
  b.environment = render_environment_block(env, initial);
  ChatSession executor{backends.executor};

  Interaction ia;
  ia.index = 0;
  ia.twin.status = TwinResult::Status::Bypassed;
  try {
    auto [completion, record] =
        send(executor, render_prompt(PromptRole::CapSingleShot, b));
    ia.prompt_hash = record.prompt_hash;
    ia.completion = completion;
    ia.tokens_out = record.tokens_out;
    ia.tokens_reported = record.tokens_reported;
  } catch (const std::runtime_error& e) {
    t.outcome = Outcome::Aborted;
    t.abort_reason = e.what();
    t.final_state = state;
    t.metrics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return t;
  }

  auto parsed = parse_tagged_snippet(ia.completion);
  if (!parsed.ok()) {
    ia.parse_error = parsed.error->message;
    t.interactions.push_back(std::move(ia));
    t.outcome = Outcome::Aborted;
    t.abort_reason = "unparseable completion";
  } else {
    ia.calls = parsed->calls;
    ia.env_results =
        detail::execute_in_env(ia.calls, env, registry, state, rng);
    ia.feedback = compose_feedback({}, ia.env_results, state, {}, std::nullopt);
    t.interactions.push_back(std::move(ia));
    t.outcome =
        goal_satisfied(state, goal) ? Outcome::Success : Outcome::Timeout;
  }

  t.final_state = state;
  t.metrics.execution_calls = static_cast<int>(t.interactions.size());
  for (const auto& r : executor.records) t.metrics.tokens_out_total += r.tokens_out;
  t.metrics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return t;
}

}  // namespace planloop
