#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planloop/util.hpp"

namespace planloop {

using Json = nlohmann::ordered_json;

struct Location {
  std::string name;
};

struct ObjectItem {
  std::string name;
  std::vector<std::string> parts;  // empty for part-less objects
  bool fixed = false;              // fixtures (outlet, board, rack) can't be grasped
};

struct GripperContent {
  std::string object;
  std::optional<std::string> part;

  bool operator==(const GripperContent&) const = default;
};

// The symbolic state: robot location, gripper, object placements, boolean
// fluents, plus the order in which fluents first became true (sequenced
// goals need it; an unordered conjunction would accept invalid task-board
// solutions).
struct WorldState {
  std::string robot_at;
  std::optional<GripperContent> gripper;
  std::map<std::string, std::string> placements;  // object -> location
  std::map<std::string, bool> fluents;
  std::vector<std::string> fluent_history;

  bool operator==(const WorldState&) const = default;

  void set_fluent(const std::string& name, bool value) {
    bool was = false;
    if (auto it = fluents.find(name); it != fluents.end()) was = it->second;
    fluents[name] = value;
    if (value && !was) fluent_history.push_back(name);
  }
};

enum class EnvKind { Service, Industrial };

struct Environment {
  std::vector<Location> locations;
  std::vector<ObjectItem> objects;
  WorldState initial;
  EnvKind kind = EnvKind::Service;
  // Receptacle pairing for plug_in: object name -> required target name.
  std::map<std::string, std::string> plug_targets;
  std::vector<std::string> button_colors;

  bool has_location(const std::string& name) const {
    for (const auto& l : locations)
      if (l.name == name) return true;
    return false;
  }

  const ObjectItem* find_object(const std::string& name) const {
    for (const auto& o : objects)
      if (o.name == name) return &o;
    return nullptr;
  }
};

struct GoalCondition {
  enum class Kind { ObjectAt, FluentTrue, GraspedByPart };
  Kind kind = Kind::ObjectAt;
  std::string object;    // ObjectAt, GraspedByPart
  std::string location;  // ObjectAt
  std::string fluent;    // FluentTrue
  std::string part;      // GraspedByPart
};

struct GoalSpec {
  std::vector<GoalCondition> conditions;
  bool ordered = false;  // FluentTrue conditions must fire in listed order
};

inline GoalSpec object_at_goal(const std::string& object,
                               const std::string& location) {
  GoalSpec g;
  g.conditions.push_back(
      {GoalCondition::Kind::ObjectAt, object, location, "", ""});
  return g;
}

inline GoalSpec fluent_goal(const std::string& fluent) {
  GoalSpec g;
  g.conditions.push_back({GoalCondition::Kind::FluentTrue, "", "", fluent, ""});
  return g;
}

// --- validation ------------------------------------------------------------

inline std::vector<std::string> validate_state(const WorldState& state,
                                               const Environment& env) {
  std::vector<std::string> violations;
  if (!env.has_location(state.robot_at))
    violations.push_back("unknown location: robot_at '" + state.robot_at + "'");

  for (const auto& [obj, loc] : state.placements) {
    if (env.find_object(obj) == nullptr)
      violations.push_back("unknown object in placements: '" + obj + "'");
    if (!env.has_location(loc))
      violations.push_back("unknown location: '" + obj + "' placed at '" +
                           loc + "'");
  }

  if (state.gripper) {
    const ObjectItem* item = env.find_object(state.gripper->object);
    if (item == nullptr) {
      violations.push_back("unknown object in gripper: '" +
                           state.gripper->object + "'");
    } else if (state.gripper->part) {
      bool known = std::find(item->parts.begin(), item->parts.end(),
                             *state.gripper->part) != item->parts.end();
      if (!known)
        violations.push_back("unknown part '" + *state.gripper->part +
                             "' of '" + item->name + "'");
    }
    if (state.placements.count(state.gripper->object) > 0)
      violations.push_back("duplicate containment: '" + state.gripper->object +
                           "' is both placed and in the gripper");
  }

  for (const auto& obj : env.objects) {
    bool placed = state.placements.count(obj.name) > 0;
    bool held = state.gripper && state.gripper->object == obj.name;
    if (!placed && !held)
      violations.push_back("object '" + obj.name +
                           "' is neither placed nor in the gripper");
  }

  for (const auto& [name, value] : state.fluents) {
    (void)value;
    if (env.initial.fluents.count(name) == 0)
      violations.push_back("unknown fluent: '" + name + "'");
  }
  return violations;
}

inline bool goal_satisfied(const WorldState& state, const GoalSpec& goal) {
  for (const auto& c : goal.conditions) {
    switch (c.kind) {
      case GoalCondition::Kind::ObjectAt: {
        auto it = state.placements.find(c.object);
        if (it == state.placements.end()) {
          bool known = state.gripper && state.gripper->object == c.object;
          if (!known)
            throw UnknownNameError("goal references unknown object '" +
                                   c.object + "'");
          return false;  // held, not placed
        }
        if (it->second != c.location) return false;
        break;
      }
      case GoalCondition::Kind::FluentTrue: {
        auto it = state.fluents.find(c.fluent);
        if (it == state.fluents.end())
          throw UnknownNameError("goal references unknown fluent '" +
                                 c.fluent + "'");
        if (!it->second) return false;
        break;
      }
      case GoalCondition::Kind::GraspedByPart: {
        if (!state.gripper || state.gripper->object != c.object) return false;
        if (!state.gripper->part || *state.gripper->part != c.part)
          return false;
        break;
      }
    }
  }
  if (goal.ordered) {
    // Fluents must appear in the history in the listed order.
    std::size_t cursor = 0;
    for (const auto& c : goal.conditions) {
      if (c.kind != GoalCondition::Kind::FluentTrue) continue;
      bool found = false;
      while (cursor < state.fluent_history.size()) {
        if (state.fluent_history[cursor++] == c.fluent) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

// --- environment builders ---------------------------------------------------

inline Environment build_service_env() {
  Environment env;
  env.kind = EnvKind::Service;
  env.locations = {{"Coffee table"}, {"Kitchen table"}, {"Desk"},
                   {"Kitchen counter"}, {"Table"}};
  env.objects = {{"Water Glass", {}}, {"Pills", {}},  {"Fork", {}},
                 {"Mouse", {}},       {"Knife", {}},  {"Screwdriver", {}},
                 {"Plate", {}},       {"Cupcake", {}}};
  env.initial.robot_at = "Table";
  const char* spots[] = {"Kitchen table", "Desk", "Coffee table", "Desk",
                         "Desk", "Desk", "Coffee table", "Table"};
  for (std::size_t i = 0; i < env.objects.size(); ++i)
    env.initial.placements[env.objects[i].name] = spots[i];
  return env;
}

inline Environment build_taskboard_env() {
  Environment env;
  env.kind = EnvKind::Industrial;
  env.locations = {{"Workbench"}};
  env.objects = {{"charger", {"plug", "cable"}},
                 {"probe", {"handle", "body"}},
                 {"probe cable", {"plug", "cable"}},
                 {"outlet", {}, true},
                 {"board", {}, true},
                 {"rack", {}, true}};
  env.initial.robot_at = "Workbench";
  for (const auto& o : env.objects) env.initial.placements[o.name] = "Workbench";
  env.initial.fluents = {{"button_blue_pressed", false},
                         {"button_red_pressed", false},
                         {"charger_plugged", false},
                         {"probe_cable_plugged", false},
                         {"probe_racked", false},
                         {"trapdoor_open", false}};
  env.plug_targets = {{"charger", "outlet"}, {"probe cable", "board"}};
  env.button_colors = {"blue", "red"};
  return env;
}

inline Environment build_env(EnvKind kind) {
  return kind == EnvKind::Service ? build_service_env() : build_taskboard_env();
}

// Initial state with some placements pinned and the rest (plus the robot
// start) drawn from a seeded stream.
inline WorldState seeded_initial_state(
    const Environment& env,
    const std::map<std::string, std::string>& pinned, std::uint64_t seed) {
  WorldState state = env.initial;
  state.placements.clear();
  Rng rng(seed);
  state.robot_at = env.locations[rng.uniform_index(env.locations.size())].name;
  for (const auto& obj : env.objects) {
    auto it = pinned.find(obj.name);
    if (it != pinned.end()) {
      state.placements[obj.name] = it->second;
    } else {
      state.placements[obj.name] =
          env.locations[rng.uniform_index(env.locations.size())].name;
    }
  }
  return state;
}

// --- JSON ---------------------------------------------------------------

inline Json to_json(const WorldState& s) {
  Json j;
  j["robot_at"] = s.robot_at;
  if (s.gripper) {
    Json g;
    g["object"] = s.gripper->object;
    if (s.gripper->part) g["part"] = *s.gripper->part;
    j["gripper"] = g;
  } else {
    j["gripper"] = nullptr;
  }
  j["placements"] = s.placements;
  j["fluents"] = s.fluents;
  j["fluent_history"] = s.fluent_history;
  return j;
}

inline WorldState world_state_from_json(const Json& j) {
  WorldState s;
  s.robot_at = j.at("robot_at").get<std::string>();
  if (j.contains("gripper") && !j.at("gripper").is_null()) {
    GripperContent g;
    g.object = j.at("gripper").at("object").get<std::string>();
    if (j.at("gripper").contains("part"))
      g.part = j.at("gripper").at("part").get<std::string>();
    s.gripper = g;
  }
  s.placements =
      j.at("placements").get<std::map<std::string, std::string>>();
  s.fluents = j.at("fluents").get<std::map<std::string, bool>>();
  if (j.contains("fluent_history"))
    s.fluent_history = j.at("fluent_history").get<std::vector<std::string>>();
  return s;
}

inline Json to_json(const GoalSpec& goal) {
  Json j;
  j["ordered"] = goal.ordered;
  Json conditions = Json::array();
  for (const auto& c : goal.conditions) {
    Json jc;
    switch (c.kind) {
      case GoalCondition::Kind::ObjectAt:
        jc["kind"] = "object_at";
        jc["object"] = c.object;
        jc["location"] = c.location;
        break;
      case GoalCondition::Kind::FluentTrue:
        jc["kind"] = "fluent_true";
        jc["fluent"] = c.fluent;
        break;
      case GoalCondition::Kind::GraspedByPart:
        jc["kind"] = "grasped_by_part";
        jc["object"] = c.object;
        jc["part"] = c.part;
        break;
    }
    conditions.push_back(jc);
  }
  j["conditions"] = conditions;
  return j;
}

inline GoalSpec goal_from_json(const Json& j) {
  GoalSpec goal;
  goal.ordered = j.value("ordered", false);
  for (const auto& jc : j.at("conditions")) {
    GoalCondition c;
    std::string kind = jc.at("kind").get<std::string>();
    if (kind == "object_at") {
      c.kind = GoalCondition::Kind::ObjectAt;
      c.object = jc.at("object").get<std::string>();
      c.location = jc.at("location").get<std::string>();
    } else if (kind == "fluent_true") {
      c.kind = GoalCondition::Kind::FluentTrue;
      c.fluent = jc.at("fluent").get<std::string>();
    } else if (kind == "grasped_by_part") {
      c.kind = GoalCondition::Kind::GraspedByPart;
      c.object = jc.at("object").get<std::string>();
      c.part = jc.at("part").get<std::string>();
    } else {
      throw ConfigError("unknown goal condition kind: " + kind);
    }
    goal.conditions.push_back(c);
  }
  return goal;
}

inline Json to_json(const Environment& env) {
  Json j;
  j["kind"] = env.kind == EnvKind::Service ? "service" : "industrial";
  Json locs = Json::array();
  for (const auto& l : env.locations) locs.push_back(l.name);
  j["locations"] = locs;
  Json objs = Json::array();
  for (const auto& o : env.objects) {
    Json jo;
    jo["name"] = o.name;
    jo["parts"] = o.parts;
    if (o.fixed) jo["fixed"] = true;
    objs.push_back(jo);
  }
  j["objects"] = objs;
  j["initial"] = to_json(env.initial);
  if (!env.plug_targets.empty()) j["plug_targets"] = env.plug_targets;
  if (!env.button_colors.empty()) j["button_colors"] = env.button_colors;
  return j;
}

inline Environment environment_from_json(const Json& j) {
  Environment env;
  env.kind = j.at("kind").get<std::string>() == "industrial"
                 ? EnvKind::Industrial
                 : EnvKind::Service;
  for (const auto& l : j.at("locations")) env.locations.push_back({l.get<std::string>()});
  for (const auto& jo : j.at("objects")) {
    ObjectItem o;
    o.name = jo.at("name").get<std::string>();
    o.parts = jo.at("parts").get<std::vector<std::string>>();
    o.fixed = jo.value("fixed", false);
    env.objects.push_back(o);
  }
  env.initial = world_state_from_json(j.at("initial"));
  if (j.contains("plug_targets"))
    env.plug_targets =
        j.at("plug_targets").get<std::map<std::string, std::string>>();
  if (j.contains("button_colors"))
    env.button_colors = j.at("button_colors").get<std::vector<std::string>>();
  return env;
}

}  // namespace planloop
