#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "planloop/util.hpp"
#include "planloop/world.hpp"

namespace planloop {

enum class ParamKind { Location, Object, Part, Color };

inline const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::Location: return "location";
    case ParamKind::Object: return "object";
    case ParamKind::Part: return "part";
    case ParamKind::Color: return "color";
  }
  return "?";
}

struct Param {
  std::string name;
  ParamKind kind = ParamKind::Object;
};

using Args = std::vector<std::string>;

// Precondition check result. `rule` is a stable machine-readable tag
// (chaincheck keys failure classification on it); `message` is the
// human-readable text fed back to the language model verbatim.
struct Precheck {
  enum class Status { Ok, Violation, ArgumentError };
  Status status = Status::Ok;
  std::string rule;
  std::string message;

  bool ok() const { return status == Status::Ok; }

  static Precheck pass() { return {}; }
  static Precheck violation(std::string rule, std::string message) {
    return {Status::Violation, std::move(rule), std::move(message)};
  }
  static Precheck argument_error(std::string message) {
    return {Status::ArgumentError, "argument_error", std::move(message)};
  }
};

struct ExecOutcome {
  enum class Kind { Success, PreconditionViolation, ArgumentError, StochasticFailure };
  Kind kind = Kind::Success;
  WorldState state;  // resulting state; unchanged for violations
  std::string rule;
  std::string message;

  bool success() const { return kind == Kind::Success; }
};

struct FailureModel {
  double probability = 0.0;
  // Applied when the stochastic failure fires. For grasp this leaves the
  // state unchanged: the object stays where it was, the gripper stays empty.
  std::function<WorldState(const Environment&, const WorldState&, const Args&)>
      effect;
  std::function<std::string(const Args&)> notice;
};

// A motion primitive modelled as an option: the precondition is the
// initialization set, the enumerated success outcomes stand in for the
// option's successful outcome set, and the failure model covers the rest.
// Intra-option motion is abstracted to an atomic transition.
struct PrimitiveSpec {
  std::string name;
  std::vector<Param> params;
  std::size_t required_params = 0;
  std::string header;  // prompt-facing skill block

  std::function<Precheck(const Environment&, const WorldState&, const Args&)>
      precondition;
  // All successful end states for these args. More than one entry only for
  // an unparameterized grasp of a multi-part object, where the held part is
  // sampled uniformly (the parent option's outcome set is the union of the
  // parameterized ones).
  std::function<std::vector<WorldState>(const Environment&, const WorldState&,
                                        const Args&)>
      success_outcomes;
  std::optional<FailureModel> failure_model;
};

struct PrimitiveRegistry {
  std::vector<PrimitiveSpec> specs;

  const PrimitiveSpec* find(const std::string& name) const {
    for (const auto& s : specs)
      if (s.name == name) return &s;
    return nullptr;
  }
};

inline Precheck check_arity(const PrimitiveSpec& spec, const Args& args) {
  if (args.size() < spec.required_params || args.size() > spec.params.size()) {
    std::string expected =
        spec.required_params == spec.params.size()
            ? std::to_string(spec.params.size())
            : std::to_string(spec.required_params) + " to " +
                  std::to_string(spec.params.size());
    return Precheck::argument_error(
        spec.name + "() takes " + expected + " argument" +
        (spec.params.size() == 1 && spec.required_params == 1 ? "" : "s") +
        ", got " + std::to_string(args.size()));
  }
  return Precheck::pass();
}

inline Precheck check_precondition(const PrimitiveSpec& spec,
                                   const Environment& env,
                                   const WorldState& state, const Args& args) {
  Precheck arity = check_arity(spec, args);
  if (!arity.ok()) return arity;
  return spec.precondition(env, state, args);
}

inline ExecOutcome execute(const PrimitiveSpec& spec, const Environment& env,
                           const WorldState& state, const Args& args,
                           Rng& rng) {
  Precheck check = check_precondition(spec, env, state, args);
  if (check.status == Precheck::Status::ArgumentError)
    return {ExecOutcome::Kind::ArgumentError, state, check.rule, check.message};
  if (check.status == Precheck::Status::Violation)
    return {ExecOutcome::Kind::PreconditionViolation, state, check.rule,
            check.message};

  if (spec.failure_model && rng.bernoulli(spec.failure_model->probability)) {
    WorldState failed = spec.failure_model->effect(env, state, args);
    return {ExecOutcome::Kind::StochasticFailure, std::move(failed),
            "stochastic_failure", spec.failure_model->notice(args)};
  }

  std::vector<WorldState> outcomes = spec.success_outcomes(env, state, args);
  std::size_t pick =
      outcomes.size() == 1 ? 0 : rng.uniform_index(outcomes.size());
  return {ExecOutcome::Kind::Success, std::move(outcomes[pick]), "", ""};
}

// --- shared precondition pieces ---------------------------------------------

namespace detail {

inline Precheck require_object(const Environment& env, const std::string& name,
                               const ObjectItem** out) {
  const ObjectItem* item = env.find_object(name);
  if (item == nullptr)
    return Precheck::violation("unknown_object",
                               "there is no object named '" + name + "'");
  *out = item;
  return Precheck::pass();
}

inline std::string fluent_slug(const std::string& object_name) {
  std::string slug;
  for (char c : object_name)
    slug += c == ' ' ? '_' : static_cast<char>(std::tolower(
                                 static_cast<unsigned char>(c)));
  return slug;
}

inline WorldState grasped_state(const WorldState& state,
                                const std::string& object,
                                std::optional<std::string> part) {
  WorldState next = state;
  next.placements.erase(object);
  next.gripper = GripperContent{object, std::move(part)};
  return next;
}

}  // namespace detail

// --- registries --------------------------------------------------------------

inline PrimitiveSpec make_move_to() {
  PrimitiveSpec spec;
  spec.name = "move_to";
  spec.params = {{"location", ParamKind::Location}};
  spec.required_params = 1;
  spec.header =
      "def move_to(location):\n"
      "    \"\"\"Move the robot to the named location. Example: "
      "location='Kitchen table'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState&,
                         const Args& args) {
    if (!env.has_location(args[0]))
      return Precheck::violation(
          "unknown_location", "there is no location named '" + args[0] + "'");
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args& args) {
    WorldState next = state;
    next.robot_at = args[0];
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveSpec make_grasp(double failure_prob, bool industrial) {
  PrimitiveSpec spec;
  spec.name = "grasp";
  spec.params = {{"object", ParamKind::Object}, {"part", ParamKind::Part}};
  spec.required_params = 1;
  spec.header =
      industrial
          ? "def grasp(object, part=None):\n"
            "    \"\"\"Pick up an object with the gripper; part names where "
            "to hold it. Example: object='charger', part='plug'.\"\"\""
          : "def grasp(object, part=None):\n"
            "    \"\"\"Pick up an object with the gripper. Example: "
            "object='Water Glass'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState& state,
                         const Args& args) {
    const ObjectItem* item = nullptr;
    if (Precheck c = detail::require_object(env, args[0], &item); !c.ok())
      return c;
    if (item->fixed)
      return Precheck::violation(
          "fixed_object", "the " + item->name + " is fixed and cannot be grasped");
    if (args.size() > 1) {
      bool known = std::find(item->parts.begin(), item->parts.end(),
                             args[1]) != item->parts.end();
      if (!known)
        return Precheck::violation("unknown_part",
                                   "the " + item->name + " has no part named '" +
                                       args[1] + "'");
    }
    if (state.gripper)
      return Precheck::violation(
          "gripper_occupied", "gripper already holds " + state.gripper->object);
    auto it = state.placements.find(args[0]);
    if (it == state.placements.end() || it->second != state.robot_at)
      return Precheck::violation(
          "not_colocated", "robot is not at the " + args[0] + "'s location");
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment& env, const WorldState& state,
                             const Args& args) {
    const ObjectItem* item = env.find_object(args[0]);
    std::vector<WorldState> outcomes;
    if (args.size() > 1) {
      outcomes.push_back(detail::grasped_state(state, args[0], args[1]));
    } else if (item != nullptr && !item->parts.empty()) {
      for (const auto& part : item->parts)
        outcomes.push_back(detail::grasped_state(state, args[0], part));
    } else {
      outcomes.push_back(detail::grasped_state(state, args[0], std::nullopt));
    }
    return outcomes;
  };
  if (failure_prob > 0.0) {
    FailureModel fm;
    fm.probability = failure_prob;
    fm.effect = [](const Environment&, const WorldState& state, const Args&) {
      return state;  // object stays put, gripper stays empty
    };
    fm.notice = [](const Args& args) {
      return "grasp failed: the " + args[0] + " slipped and was not grasped";
    };
    spec.failure_model = fm;
  }
  return spec;
}

inline PrimitiveSpec make_put_down() {
  PrimitiveSpec spec;
  spec.name = "put_down";
  spec.params = {{"object", ParamKind::Object},
                 {"location", ParamKind::Location}};
  spec.required_params = 2;
  spec.header =
      "def put_down(object, location):\n"
      "    \"\"\"Put the held object down at the named location. Example: "
      "object='Water Glass', location='Coffee table'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState& state,
                         const Args& args) {
    const ObjectItem* item = nullptr;
    if (Precheck c = detail::require_object(env, args[0], &item); !c.ok())
      return c;
    if (!env.has_location(args[1]))
      return Precheck::violation(
          "unknown_location", "there is no location named '" + args[1] + "'");
    if (!state.gripper || state.gripper->object != args[0])
      return Precheck::violation("not_holding",
                                 "the " + args[0] + " is not in the gripper");
    if (state.robot_at != args[1])
      return Precheck::violation(
          "not_at_location", "robot is not at the " + args[1]);
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args& args) {
    WorldState next = state;
    next.gripper.reset();
    next.placements[args[0]] = args[1];
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveSpec make_press_button() {
  PrimitiveSpec spec;
  spec.name = "press_button";
  spec.params = {{"color", ParamKind::Color}};
  spec.required_params = 1;
  spec.header =
      "def press_button(color):\n"
      "    \"\"\"Press the named button on the task board. Example: "
      "color='blue'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState& state,
                         const Args& args) {
    bool known = std::find(env.button_colors.begin(), env.button_colors.end(),
                           args[0]) != env.button_colors.end();
    if (!known)
      return Precheck::violation(
          "unknown_color", "there is no " + args[0] + " button on the board");
    if (state.gripper)
      return Precheck::violation(
          "gripper_occupied",
          "gripper must be empty to press a button, it holds " +
              state.gripper->object);
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args& args) {
    WorldState next = state;
    next.set_fluent("button_" + args[0] + "_pressed", true);
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveSpec make_plug_in() {
  PrimitiveSpec spec;
  spec.name = "plug_in";
  spec.params = {{"object", ParamKind::Object}, {"target", ParamKind::Object}};
  spec.required_params = 2;
  spec.header =
      "def plug_in(object, target):\n"
      "    \"\"\"Plug the held object into its receptacle. Example: "
      "object='charger', target='outlet'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState& state,
                         const Args& args) {
    const ObjectItem* item = nullptr;
    if (Precheck c = detail::require_object(env, args[0], &item); !c.ok())
      return c;
    const ObjectItem* target = nullptr;
    if (Precheck c = detail::require_object(env, args[1], &target); !c.ok())
      return c;
    auto pairing = env.plug_targets.find(args[0]);
    if (pairing == env.plug_targets.end())
      return Precheck::violation("not_pluggable",
                                 "the " + args[0] + " cannot be plugged in");
    if (pairing->second != args[1])
      return Precheck::violation(
          "wrong_target",
          "the " + args[0] + " does not plug into the " + args[1]);
    if (!state.gripper || state.gripper->object != args[0])
      return Precheck::violation("not_holding",
                                 "the " + args[0] + " is not in the gripper");
    if (!state.gripper->part || *state.gripper->part != "plug")
      return Precheck::violation(
          "wrong_part", args[0] + " is grasped by the wrong part");
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args& args) {
    WorldState next = state;
    next.gripper.reset();
    auto target_loc = next.placements.find(args[1]);
    next.placements[args[0]] = target_loc != next.placements.end()
                                   ? target_loc->second
                                   : next.robot_at;
    next.set_fluent(detail::fluent_slug(args[0]) + "_plugged", true);
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveSpec make_place_in_rack() {
  PrimitiveSpec spec;
  spec.name = "place_in_rack";
  spec.params = {{"object", ParamKind::Object}};
  spec.required_params = 1;
  spec.header =
      "def place_in_rack(object):\n"
      "    \"\"\"Place the held object in its rack. Example: "
      "object='probe'.\"\"\"";
  spec.precondition = [](const Environment& env, const WorldState& state,
                         const Args& args) {
    const ObjectItem* item = nullptr;
    if (Precheck c = detail::require_object(env, args[0], &item); !c.ok())
      return c;
    bool has_handle = std::find(item->parts.begin(), item->parts.end(),
                                "handle") != item->parts.end();
    if (!has_handle)
      return Precheck::violation(
          "not_rackable", "the " + args[0] + " cannot be placed in the rack");
    if (!state.gripper || state.gripper->object != args[0])
      return Precheck::violation("not_holding",
                                 "the " + args[0] + " is not in the gripper");
    if (!state.gripper->part || *state.gripper->part != "handle")
      return Precheck::violation(
          "wrong_part", args[0] + " is grasped by the wrong part");
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args& args) {
    WorldState next = state;
    next.gripper.reset();
    auto rack_loc = next.placements.find("rack");
    next.placements[args[0]] =
        rack_loc != next.placements.end() ? rack_loc->second : next.robot_at;
    next.set_fluent(detail::fluent_slug(args[0]) + "_racked", true);
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveSpec make_open_trapdoor() {
  PrimitiveSpec spec;
  spec.name = "open_trapdoor";
  spec.params = {};
  spec.required_params = 0;
  spec.header =
      "def open_trapdoor():\n"
      "    \"\"\"Open the task-board trapdoor. Takes no arguments.\"\"\"";
  spec.precondition = [](const Environment&, const WorldState& state,
                         const Args&) {
    if (state.gripper)
      return Precheck::violation(
          "gripper_occupied",
          "gripper must be empty to open the trapdoor, it holds " +
              state.gripper->object);
    return Precheck::pass();
  };
  spec.success_outcomes = [](const Environment&, const WorldState& state,
                             const Args&) {
    WorldState next = state;
    next.set_fluent("trapdoor_open", true);
    return std::vector<WorldState>{next};
  };
  return spec;
}

inline PrimitiveRegistry service_registry(double grasp_failure_prob = 0.10) {
  PrimitiveRegistry reg;
  reg.specs.push_back(make_move_to());
  reg.specs.push_back(make_grasp(grasp_failure_prob, false));
  reg.specs.push_back(make_put_down());
  return reg;
}

inline PrimitiveRegistry industrial_registry(double grasp_failure_prob = 0.0) {
  PrimitiveRegistry reg;
  reg.specs.push_back(make_grasp(grasp_failure_prob, true));
  reg.specs.push_back(make_press_button());
  reg.specs.push_back(make_plug_in());
  reg.specs.push_back(make_place_in_rack());
  reg.specs.push_back(make_open_trapdoor());
  return reg;
}

inline PrimitiveRegistry registry_for(const Environment& env,
                                      double grasp_failure_prob) {
  return env.kind == EnvKind::Service ? service_registry(grasp_failure_prob)
                                      : industrial_registry(grasp_failure_prob);
}

inline std::string skill_headers(const PrimitiveRegistry& registry) {
  std::string out;
  for (const auto& spec : registry.specs) {
    if (!out.empty()) out += "\n\n";
    out += spec.header;
  }
  return out;
}

inline Json registry_manifest(const PrimitiveRegistry& registry) {
  Json j = Json::array();
  for (const auto& spec : registry.specs) {
    Json entry;
    entry["name"] = spec.name;
    Json params = Json::array();
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
      Json p;
      p["name"] = spec.params[i].name;
      p["kind"] = param_kind_name(spec.params[i].kind);
      p["optional"] = i >= spec.required_params;
      params.push_back(p);
    }
    entry["params"] = params;
    entry["header"] = spec.header;
    j.push_back(entry);
  }
  return j;
}

}  // namespace planloop
