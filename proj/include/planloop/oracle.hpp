#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planloop/gateway.hpp"
#include "planloop/parser.hpp"
#include "planloop/prompts.hpp"
#include "planloop/world.hpp"

namespace planloop {

// Fault switches mirror the two failure modes plus a code-writing fault:
// omit_plan_step / omit_move_before_grasp produce missing subgoals,
// omit_grasp_part produces subgoal mischaracterization, and
// emit_unparseable_once produces one unusable completion.
struct OracleConfig {
  bool omit_move_before_grasp = false;
  bool omit_grasp_part = false;
  bool emit_unparseable_once = false;
  bool omit_plan_step = false;
  bool recover_on_feedback = false;
};

// Deterministic rule-based agent behind the Backend interface. Without
// faults it solves every task the generators can produce, which makes it a
// correctness oracle for the whole pipeline; with faults it reproduces the
// failure modes on demand. It reads only the rendered prompts (same wire
// contract as a live model) plus the episode's environment and initial
// state it was constructed with.
class OracleBackend : public Backend {
 public:
  OracleBackend(Environment env, WorldState initial, OracleConfig config)
      : env_(std::move(env)),
        initial_(std::move(initial)),
        config_(config),
        belief_(initial_) {}

  BackendCompletion complete(const std::vector<Message>& messages) override {
    if (messages.empty() || messages.back().role != ChatRole::User)
      throw ConfigError("oracle expects a trailing user message");
    return {respond(messages.back().content), std::nullopt};
  }

  std::string kind() const override { return "oracle"; }

  std::string respond(const std::string& prompt) {
    if (prompt.rfind(markers::kFeedbackDone, 0) == 0 ||
        prompt.rfind("Feedback: Error", 0) == 0)
      return respond_executor_followup(prompt);
    if (contains(prompt, "Please only output the plan as a tuple of strings"))
      return respond_planner(prompt);
    if (contains(prompt, "fill out the following python dictionary"))
      return respond_eo(prompt);
    if (contains(prompt, "The code is executed once, without feedback"))
      return respond_cap(prompt);
    if (contains(prompt, "The task and the plan:"))
      return respond_executor_initial(prompt);
    if (contains(prompt, "Rewrite the following robot task instruction"))
      return respond_paraphrase(prompt);
    throw ConfigError("oracle cannot identify the prompt role");
  }

 private:
  // --- task derivation -------------------------------------------------------

  struct Derivation {
    bool valid = false;
    std::vector<PrimitiveCall> chain;
  };

  static std::optional<std::string> slice(const std::string& text,
                                          const std::string& begin,
                                          const std::string& end) {
    std::size_t b = text.find(begin);
    if (b == std::string::npos) return std::nullopt;
    b += begin.size();
    std::size_t e = text.find(end, b);
    if (e == std::string::npos) return std::nullopt;
    return text.substr(b, e - b);
  }

  void derive(const std::string& task) {
    if (derived_ && task_ == task) return;
    task_ = task;
    derived_ = true;
    derivation_ = Derivation{};

    if (env_.kind == EnvKind::Industrial) {
      if (contains(task, "board") && !contains(task, "charger")) {
        derivation_.chain = {{"press_button", {"blue"}},
                             {"grasp", {"probe cable", "plug"}},
                             {"plug_in", {"probe cable", "board"}},
                             {"press_button", {"red"}},
                             {"open_trapdoor", {}}};
        derivation_.valid = true;
      } else if (contains(task, "charger")) {
        derivation_.chain = {{"grasp", {"charger", "plug"}},
                             {"plug_in", {"charger", "outlet"}}};
        derivation_.valid = true;
      } else if (contains(task, "probe") && contains(task, "rack")) {
        derivation_.chain = {{"grasp", {"probe", "handle"}},
                             {"place_in_rack", {"probe"}}};
        derivation_.valid = true;
      }
      return;
    }

    // Pick-and-place: the object is the longest catalog name mentioned, the
    // source is where the object actually starts, the target is the
    // earliest-mentioned other location.
    const ObjectItem* object = nullptr;
    for (const auto& o : env_.objects) {
      if (!contains(task, o.name)) continue;
      if (object == nullptr || o.name.size() > object->name.size()) object = &o;
    }
    if (object == nullptr) return;
    auto placed = initial_.placements.find(object->name);
    if (placed == initial_.placements.end()) return;
    const std::string& source = placed->second;

    std::string target;
    std::size_t best = std::string::npos;
    for (const auto& l : env_.locations) {
      if (l.name == source) continue;
      std::size_t pos = task.find(l.name);
      if (pos == std::string::npos) continue;
      if (pos < best || (pos == best && l.name.size() > target.size())) {
        best = pos;
        target = l.name;
      }
    }
    if (target.empty()) return;

    derivation_.chain = {{"move_to", {source}},
                         {"grasp", {object->name}},
                         {"move_to", {target}},
                         {"put_down", {object->name, target}}};
    derivation_.valid = true;
  }

  // --- plan step text --------------------------------------------------------

  static std::string humanize(const PrimitiveCall& call) {
    if (call.name == "move_to") return "Move to the " + call.args[0];
    if (call.name == "grasp") return "Grasp the " + call.args[0];
    if (call.name == "put_down")
      return "Put down the " + call.args[0] + " on the " + call.args[1];
    if (call.name == "press_button")
      return "Press the " + call.args[0] + " button";
    if (call.name == "plug_in")
      return "Plug the " + call.args[0] + " into the " + call.args[1];
    if (call.name == "place_in_rack")
      return "Place the " + call.args[0] + " in its rack";
    if (call.name == "open_trapdoor") return "Open the trapdoor";
    return call.name;
  }

  std::optional<PrimitiveCall> invert_step(const std::string& step) const {
    auto after = [&](const char* prefix) -> std::optional<std::string> {
      std::string p = prefix;
      if (step.rfind(p, 0) != 0) return std::nullopt;
      return step.substr(p.size());
    };
    if (auto rest = after("Move to the ")) return PrimitiveCall{"move_to", {*rest}};
    if (auto rest = after("Grasp the ")) return PrimitiveCall{"grasp", {*rest}};
    if (auto rest = after("Put down the ")) {
      std::size_t sep = rest->find(" on the ");
      if (sep == std::string::npos) return std::nullopt;
      return PrimitiveCall{"put_down",
                           {rest->substr(0, sep), rest->substr(sep + 8)}};
    }
    if (auto rest = after("Press the ")) {
      std::size_t sep = rest->find(" button");
      if (sep == std::string::npos) return std::nullopt;
      return PrimitiveCall{"press_button", {rest->substr(0, sep)}};
    }
    if (auto rest = after("Plug the ")) {
      std::size_t sep = rest->find(" into the ");
      if (sep == std::string::npos) return std::nullopt;
      return PrimitiveCall{"plug_in",
                           {rest->substr(0, sep), rest->substr(sep + 10)}};
    }
    if (auto rest = after("Place the ")) {
      std::size_t sep = rest->find(" in its rack");
      if (sep == std::string::npos) return std::nullopt;
      return PrimitiveCall{"place_in_rack", {rest->substr(0, sep)}};
    }
    if (step == "Open the trapdoor") return PrimitiveCall{"open_trapdoor", {}};
    return std::nullopt;
  }

  // --- belief ------------------------------------------------------------------

  bool holds(const WorldState& b, const std::string& object) const {
    return b.gripper && b.gripper->object == object;
  }

  std::string believed_location(const WorldState& b,
                                const std::string& object) const {
    auto it = b.placements.find(object);
    if (it != b.placements.end()) return it->second;
    auto init = initial_.placements.find(object);
    return init != initial_.placements.end() ? init->second : b.robot_at;
  }

  // Intended effect of an own call; placements are kept as last known
  // resting places (a grasp does not erase them, so a reported-empty gripper
  // after a failed grasp still points at the object).
  void apply_intended(const PrimitiveCall& call, WorldState& b) const {
    if (call.name == "move_to") {
      b.robot_at = call.args[0];
    } else if (call.name == "grasp") {
      GripperContent g;
      g.object = call.args[0];
      if (call.args.size() > 1) g.part = call.args[1];
      b.gripper = g;
    } else if (call.name == "put_down") {
      b.gripper.reset();
      b.placements[call.args[0]] = call.args[1];
    } else if (call.name == "press_button") {
      b.set_fluent("button_" + call.args[0] + "_pressed", true);
    } else if (call.name == "plug_in") {
      b.gripper.reset();
      std::string slug;
      for (char c : call.args[0]) slug += c == ' ' ? '_' : c;
      b.set_fluent(slug + "_plugged", true);
    } else if (call.name == "place_in_rack") {
      b.gripper.reset();
      std::string slug;
      for (char c : call.args[0]) slug += c == ' ' ? '_' : c;
      b.set_fluent(slug + "_racked", true);
    } else if (call.name == "open_trapdoor") {
      b.set_fluent("trapdoor_open", true);
    }
  }

  bool effect_reached(const PrimitiveCall& call, const WorldState& b) const {
    auto fluent = [&](const std::string& name) {
      auto it = b.fluents.find(name);
      return it != b.fluents.end() && it->second;
    };
    if (call.name == "move_to") return b.robot_at == call.args[0];
    if (call.name == "grasp") return holds(b, call.args[0]);
    if (call.name == "put_down")
      return !holds(b, call.args[0]) &&
             believed_location(b, call.args[0]) == call.args[1];
    if (call.name == "press_button")
      return fluent("button_" + call.args[0] + "_pressed");
    if (call.name == "plug_in" || call.name == "place_in_rack") {
      std::string slug;
      for (char c : call.args[0]) slug += c == ' ' ? '_' : c;
      return fluent(slug + (call.name == "plug_in" ? "_plugged" : "_racked"));
    }
    if (call.name == "open_trapdoor") return fluent("trapdoor_open");
    return false;
  }

  void sync_from_reminder(const std::string& prompt) {
    std::size_t r = prompt.find(markers::kRobotAt);
    if (r != std::string::npos) {
      std::size_t pos = r + std::string(markers::kRobotAt).size();
      bool bad = false;
      if (auto loc = lex::read_string(prompt, pos, &bad)) belief_.robot_at = *loc;
    }
    if (contains(prompt, markers::kGripperEmpty)) {
      belief_.gripper.reset();
      return;
    }
    std::size_t g = prompt.find(markers::kGripperHolds);
    if (g == std::string::npos) return;
    std::size_t pos = g + std::string(markers::kGripperHolds).size();
    bool bad = false;
    auto object = lex::read_string(prompt, pos, &bad);
    if (!object) return;
    GripperContent content;
    content.object = *object;
    const std::string part_marker = " (by the ";
    if (prompt.compare(pos, part_marker.size(), part_marker) == 0) {
      pos += part_marker.size();
      if (auto part = lex::read_string(prompt, pos, &bad)) content.part = *part;
    }
    belief_.gripper = content;
  }

  // --- call synthesis -----------------------------------------------------------

  std::optional<std::string> part_from_eo(const std::string& object,
                                          const std::string& eo) const {
    const ObjectItem* item = env_.find_object(object);
    if (item == nullptr) return std::nullopt;
    for (const auto& part : item->parts)
      if (contains(eo, "the " + part + " part")) return part;
    return std::nullopt;
  }

  // The bare call for a plan step; parts come only from the expected
  // outcome text (without the EO module the executor has no way to know
  // which part matters — exactly the behavior behind the 0.5 drop).
  std::vector<PrimitiveCall> literal_calls(const PrimitiveCall& call,
                                           const std::string& eo) const {
    PrimitiveCall c = call;
    if (c.name == "grasp") {
      c.args = {c.args[0]};
      if (auto part = part_from_eo(c.args[0], eo)) c.args.push_back(*part);
    }
    return {c};
  }

  // Minimal sequence achieving `call` from the belief state, prerequisites
  // included. Used on recovery turns and in goal mode.
  std::vector<PrimitiveCall> minimal_calls(const PrimitiveCall& call,
                                           const std::string& eo,
                                           WorldState& b) const {
    std::vector<PrimitiveCall> out;
    auto emit = [&](PrimitiveCall c) {
      apply_intended(c, b);
      out.push_back(std::move(c));
    };
    auto ensure_at = [&](const std::string& loc) {
      if (b.robot_at != loc && env_.has_location(loc))
        emit({"move_to", {loc}});
    };
    auto ensure_holding = [&](const std::string& object,
                              std::optional<std::string> part) {
      if (holds(b, object)) return;
      if (b.gripper) return;  // occupied by something else: unsatisfiable
      ensure_at(believed_location(b, object));
      PrimitiveCall g{"grasp", {object}};
      if (part) g.args.push_back(*part);
      emit(g);
    };

    if (call.name == "move_to") {
      emit(call);
    } else if (call.name == "grasp") {
      PrimitiveCall g = literal_calls(call, eo)[0];
      if (!holds(b, g.args[0])) {
        ensure_at(believed_location(b, g.args[0]));
        emit(g);
      }
    } else if (call.name == "put_down") {
      ensure_holding(call.args[0], std::nullopt);
      ensure_at(call.args[1]);
      emit(call);
    } else if (call.name == "plug_in" || call.name == "place_in_rack") {
      auto part = part_from_eo(call.args[0], eo);
      ensure_holding(call.args[0], part);
      emit(call);
    } else {
      emit(call);
    }
    if (out.empty()) out.push_back(call);  // keep the snippet non-empty
    return out;
  }

  std::vector<PrimitiveCall> goal_mode_calls(const std::string& eo,
                                             bool with_prereqs) const {
    WorldState sim = belief_;
    std::vector<PrimitiveCall> out;
    for (const auto& step : derivation_.chain) {
      if (effect_reached(step, sim)) continue;
      if (with_prereqs) {
        for (auto& c : minimal_calls(step, eo, sim)) out.push_back(std::move(c));
      } else {
        apply_intended(step, sim);
        out.push_back(step);
      }
    }
    if (out.empty() && !derivation_.chain.empty())
      out.push_back(derivation_.chain.back());
    return out;
  }

  std::vector<PrimitiveCall> apply_faults(std::vector<PrimitiveCall> calls,
                                          const std::vector<std::string>& rest,
                                          const std::string& eo) {
    if (config_.omit_move_before_grasp) {
      std::vector<PrimitiveCall> kept;
      for (auto& c : calls)
        if (c.name != "move_to") kept.push_back(std::move(c));
      // A pure move step collapses onto the following step's call.
      std::size_t next = 1;
      while (kept.empty() && next < rest.size()) {
        if (auto call = invert_step(rest[next])) {
          for (auto& c : literal_calls(*call, eo))
            if (c.name != "move_to") kept.push_back(std::move(c));
        }
        ++next;
      }
      calls = std::move(kept);
    }
    if (config_.omit_grasp_part) {
      for (auto& c : calls)
        if (c.name == "grasp" && c.args.size() > 1) c.args.resize(1);
    }
    return calls;
  }

  std::string wrap_code(const std::vector<PrimitiveCall>& calls) {
    last_emitted_ = calls;
    if (calls.empty())
      return "I could not determine a primitive for this step.";
    SnippetProgram program{calls};
    return "<code>\n" + print_snippet(program) + "</code>";
  }

  // --- role handlers ---------------------------------------------------------

  std::string respond_planner(const std::string& prompt) {
    auto task = slice(prompt, markers::kPlannerTask, markers::kPlannerTail);
    if (!task) throw ConfigError("planner prompt lacks the task marker");
    derive(*task);
    if (!derivation_.valid) return render_plan_literal({*task});
    std::vector<std::string> steps;
    bool dropped = false;
    for (const auto& call : derivation_.chain) {
      if (config_.omit_plan_step && !dropped && call.name == "move_to") {
        dropped = true;  // missing-subgoal plan: first move step dropped
        continue;
      }
      steps.push_back(humanize(call));
    }
    return render_plan_literal(steps);
  }

  std::string respond_eo(const std::string& prompt) {
    auto task = slice(prompt, markers::kTask, markers::kEoPlanTail);
    if (!task) throw ConfigError("eo prompt lacks the task marker");
    derive(*task);
    std::size_t plan_at = prompt.find(markers::kEoPlanTail);
    auto plan = parse_plan(prompt.substr(plan_at));
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& step : plan.ok() ? *plan : std::vector<std::string>{})
      entries.emplace_back(step, eo_sentence(step));
    return render_dict_literal(entries);
  }

  std::string eo_sentence(const std::string& step) const {
    auto call = invert_step(step);
    if (!call) return "The step should be completed.";
    if (call->name == "move_to")
      return "The robot should be at the " + call->args[0] + ".";
    if (call->name == "grasp") {
      std::string out =
          "The " + call->args[0] + " should be in the robot's gripper.";
      if (!config_.omit_grasp_part) {
        // The chain knows which part matters for the rest of the task.
        for (const auto& c : derivation_.chain)
          if (c.name == "grasp" && c.args[0] == call->args[0] &&
              c.args.size() > 1)
            out += " The " + call->args[0] + " should be grasped by the " +
                   c.args[1] + " part.";
      }
      return out;
    }
    if (call->name == "put_down")
      return "The " + call->args[0] + " should be on the " + call->args[1] + ".";
    if (call->name == "press_button")
      return "The " + call->args[0] + " button should be pressed.";
    if (call->name == "plug_in")
      return "The " + call->args[0] + " should be plugged into the " +
             call->args[1] + ".";
    if (call->name == "place_in_rack")
      return "The " + call->args[0] + " should be in its rack.";
    if (call->name == "open_trapdoor") return "The trapdoor should be open.";
    return "The step should be completed.";
  }

  std::string respond_executor_initial(const std::string& prompt) {
    auto task = slice(prompt, markers::kTask, markers::kExecPlanTail);
    if (!task) throw ConfigError("executor prompt lacks the task marker");
    derive(*task);
    belief_ = initial_;
    std::size_t plan_at = prompt.find(markers::kExecPlanTail);
    auto plan = parse_plan(prompt.substr(plan_at));
    eos_.clear();
    if (contains(prompt, "expected outcomes of each step")) {
      if (auto dict = parse_dict_literal(prompt); dict.ok())
        for (const auto& [k, v] : *dict) eos_[k] = v;
    }
    return respond_for_steps(plan.ok() ? *plan : std::vector<std::string>{},
                             false);
  }

  std::string respond_executor_followup(const std::string& prompt) {
    bool error = prompt.rfind(markers::kFeedbackError, 0) == 0;
    if (!error && !last_emitted_.empty()) {
      // Done: trust the feedback and fold the intended effects into belief.
      for (const auto& call : last_emitted_) apply_intended(call, belief_);
    }
    sync_from_reminder(prompt);

    std::vector<std::string> rest;
    std::size_t plan_at = prompt.find(markers::kRemainingPlan);
    if (plan_at != std::string::npos) {
      if (auto plan = parse_plan(prompt.substr(plan_at)); plan.ok())
        rest = *plan;
    }
    std::size_t eo_at = prompt.find(markers::kEoGuide);
    current_eo_.clear();
    if (eo_at != std::string::npos) {
      std::size_t line = prompt.find('\n', eo_at);
      if (line != std::string::npos) {
        std::size_t end = prompt.find('\n', line + 1);
        current_eo_ = prompt.substr(line + 1, end == std::string::npos
                                                  ? std::string::npos
                                                  : end - line - 1);
      }
    }
    return respond_for_steps(rest, error);
  }

  std::string respond_for_steps(const std::vector<std::string>& rest,
                                bool last_was_error) {
    bool recovering = last_was_error && config_.recover_on_feedback;
    if (config_.emit_unparseable_once && !unparseable_used_ && !recovering) {
      unparseable_used_ = true;
      last_emitted_.clear();
      return "I am unable to produce code for this step right now.";
    }

    std::string eo = current_eo_;
    if (eo.empty() && !rest.empty()) {
      auto it = eos_.find(rest[0]);
      if (it != eos_.end()) eo = it->second;
    }

    std::vector<PrimitiveCall> calls;
    if (rest.empty()) {
      if (!derivation_.valid) {
        last_emitted_.clear();
        return "I could not determine a primitive for this step.";
      }
      calls = recovering ? goal_mode_calls(eo, true)
                         : std::vector<PrimitiveCall>{derivation_.chain.back()};
    } else if (auto call = invert_step(rest[0])) {
      WorldState scratch = belief_;
      calls = recovering ? minimal_calls(*call, eo, scratch)
                         : literal_calls(*call, eo);
    } else if (derivation_.valid) {
      // Step text we did not generate (raw-instruction pseudo-step).
      calls = goal_mode_calls(eo, recovering);
    } else {
      last_emitted_.clear();
      return "I could not determine a primitive for this step.";
    }

    if (!recovering) calls = apply_faults(std::move(calls), rest, eo);
    return wrap_code(calls);
  }

  std::string respond_paraphrase(const std::string& prompt) {
    std::size_t at = prompt.find("Instruction: ");
    std::string instruction =
        at == std::string::npos ? "" : trim(prompt.substr(at + 13));
    // Rewording that keeps every name verbatim; varies across calls.
    const char* prefixes[] = {"Kindly do the following: ",
                              "Here is your task: ",
                              "When you are ready: "};
    return prefixes[paraphrase_count_++ % 3] + instruction;
  }

  std::string respond_cap(const std::string& prompt) {
    auto task = slice(prompt, markers::kTask, markers::kCapTail);
    if (!task) throw ConfigError("cap prompt lacks the task marker");
    derive(*task);
    belief_ = initial_;
    current_eo_.clear();
    if (!derivation_.valid)
      return "I could not determine a program for this task.";
    if (config_.emit_unparseable_once && !unparseable_used_) {
      unparseable_used_ = true;
      return "I am unable to produce code for this task right now.";
    }
    auto calls = apply_faults(goal_mode_calls("", true), {}, "");
    return wrap_code(calls);
  }

  Environment env_;
  WorldState initial_;
  OracleConfig config_;

  bool derived_ = false;
  std::string task_;
  Derivation derivation_;

  WorldState belief_;
  std::vector<PrimitiveCall> last_emitted_;
  std::map<std::string, std::string> eos_;
  std::string current_eo_;
  bool unparseable_used_ = false;
  std::size_t paraphrase_count_ = 0;
};

}  // namespace planloop
