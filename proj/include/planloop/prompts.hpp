#pragma once

#include <optional>
#include <string>
#include <vector>

#include "planloop/parser.hpp"
#include "planloop/primitives.hpp"
#include "planloop/world.hpp"

namespace planloop {

class UnboundPlaceholder : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PromptRole { Planner, Eo, ExecutorInitial, ExecutorFollowup, CapSingleShot };

// Marker strings shared between the renderer and the rule-based oracle,
// which locates the task/plan/feedback inside rendered prompts. Changing
// any of these changes the wire contract with recorded transcripts.
namespace markers {
inline constexpr const char* kPlannerTask = "Your task is the following: ";
inline constexpr const char* kPlannerTail = "\nPlease output an plan";
inline constexpr const char* kTask = "You are in charge of executing the following task: ";
inline constexpr const char* kEoPlanTail = ". The plan consists of the following steps: ";
inline constexpr const char* kExecPlanTail = ". The plan is: ";
inline constexpr const char* kCapTail = "\nEnvironment:";
inline constexpr const char* kFeedbackDone = "Feedback: Done";
inline constexpr const char* kFeedbackError = "Feedback: Error: ";
inline constexpr const char* kRobotAt = "The robot is at the ";
inline constexpr const char* kGripperEmpty = "The gripper is empty.";
inline constexpr const char* kGripperHolds = "The gripper holds the ";
inline constexpr const char* kRemainingPlan = "The plan is: ";
inline constexpr const char* kEoGuide =
    "Here is the expected outcome of the current step, which you can use as "
    "a guide:";
}  // namespace markers

struct PromptBindings {
  std::optional<std::string> task;
  std::optional<std::vector<std::string>> plan;
  std::optional<std::vector<std::pair<std::string, std::string>>> eos;
  std::optional<std::string> skills;
  std::optional<std::string> environment;
  bool include_eos = true;

  // follow-up fields
  std::optional<bool> feedback_done;
  std::optional<std::string> feedback_error;
  std::optional<std::string> state_reminder;
  std::optional<std::string> current_eo;
};

namespace detail {

inline const std::string& require(const std::optional<std::string>& v,
                                  const char* name) {
  if (!v) throw UnboundPlaceholder(std::string("unbound placeholder: ") + name);
  return *v;
}

template <typename T>
inline const T& require_v(const std::optional<T>& v, const char* name) {
  if (!v) throw UnboundPlaceholder(std::string("unbound placeholder: ") + name);
  return *v;
}

}  // namespace detail

// The environment description substituted into executor prompts: names of
// objects and locations, initial placements, and the robot's start.
inline std::string render_environment_block(const Environment& env,
                                            const WorldState& initial) {
  std::string out = "Environment:\n";
  out += "Locations: (";
  for (std::size_t i = 0; i < env.locations.size(); ++i) {
    if (i > 0) out += ", ";
    out += py_quote(env.locations[i].name);
  }
  if (env.locations.size() == 1) out += ",";
  out += ")\n";
  out += "Objects: (";
  for (std::size_t i = 0; i < env.objects.size(); ++i) {
    if (i > 0) out += ", ";
    std::string label = env.objects[i].name;
    if (!env.objects[i].parts.empty()) {
      label += " (parts: ";
      for (std::size_t p = 0; p < env.objects[i].parts.size(); ++p) {
        if (p > 0) label += ", ";
        label += env.objects[i].parts[p];
      }
      label += ")";
    }
    out += py_quote(label);
  }
  if (env.objects.size() == 1) out += ",";
  out += ")\n";
  out += "Object locations: {";
  bool first = true;
  for (const auto& obj : env.objects) {
    auto it = initial.placements.find(obj.name);
    if (it == initial.placements.end()) continue;
    if (!first) out += ", ";
    first = false;
    out += py_quote(obj.name) + ": " + py_quote(it->second);
  }
  out += "}\n";
  out += "The robot starts at the " + py_quote(initial.robot_at) + " location.";
  return out;
}

inline std::string render_state_reminder(const WorldState& state) {
  std::string out = markers::kRobotAt + py_quote(state.robot_at) + " location. ";
  if (!state.gripper) {
    out += markers::kGripperEmpty;
  } else {
    out += markers::kGripperHolds + py_quote(state.gripper->object);
    if (state.gripper->part)
      out += " (by the " + py_quote(*state.gripper->part) + " part)";
    out += ".";
  }
  return out;
}

inline std::string render_prompt(PromptRole role, const PromptBindings& b) {
  switch (role) {
    case PromptRole::Planner: {
      const std::string& task = detail::require(b.task, "Task");
      return "You are in charge of a mobile robot with an arm ending in a "
             "gripper. Your task is the following: " +
             task +
             "\nPlease output an plan, composed of simple actions, to carry "
             "out this task. Remember that the robot should always move to a "
             "location before interacting with objects in this location, "
             "unless it is already there. However, you can assume that simple "
             "actions (such as grasping or putting down objects) "
             "automatically move the arm to the correct position.\nPlease "
             "only output the plan as a tuple of strings, where each step is "
             "a string, without any other text.";
    }
    case PromptRole::Eo: {
      const std::string& task = detail::require(b.task, "Task");
      const auto& plan = detail::require_v(b.plan, "Plan");
      std::vector<std::pair<std::string, std::string>> dict_template;
      for (const auto& step : plan) dict_template.emplace_back(step, "");
      return "You are in charge of executing the following task: " + task +
             ". The plan consists of the following steps: " +
             render_plan_literal(plan) +
             " Each of the steps of the plan will be executed with a mobile "
             "robot equipped with an arm ending in a gripper. For each step "
             "of the plan, I need you to give the expected outcome of the "
             "actions involved in the step, in physical and visual terms.\n"
             "This should consist of one or two short, simple sentences that "
             "are a more complete and detailed description of the step's "
             "outcome. The sentences should describe the final state of the "
             "robot, for example if it should be at a location, have grasped "
             "an object (and what part of the object, if relevant for the "
             "task), or where an object should be put down. You can add some "
             "information if the plan is too concise. Here are some examples, "
             "with the plan step first and the expected outcome after:\n"
             "- Put bottle on shelf: The bottle should be on the shelf.\n"
             "- Grasp the mug: The mug should be in the robot's gripper.\n"
             "- Grasp the knife: The knife blade should be in the robot's "
             "gripper.\n"
             "For each step of the plan, please briefly describe the expected "
             "outcome as shown above. Please try to be concise and focus on "
             "the most relevant information. Please fill out the following "
             "python dictionary with the expected outcomes: " +
             render_dict_literal(dict_template) +
             ". Only output the dictionary and no other text.";
    }
    case PromptRole::ExecutorInitial: {
      const std::string& task = detail::require(b.task, "Task");
      const auto& plan = detail::require_v(b.plan, "Plan");
      const std::string& skills = detail::require(b.skills, "Skills");
      const std::string& environment =
          detail::require(b.environment, "Environment");
      std::string out =
          "Context:\n"
          "Your are now in charge of a mobile robot equipped with one arm "
          "with a parallel gripper. You will be given a high-level task that "
          "you will need to fulfill using this robot, and the corresponding "
          "plan, which is a series of simpler steps. You will need to carry "
          "out the task step by step by interacting with the system using "
          "some code primitives. At each step the plan will be updated and "
          "you will receive feedback.\n"
          "The skills are python functions, which allow you to perceive and "
          "act on your environment.\n"
          "Skills:\n"
          "Here are the functions and skills, with examples of the syntax:\n" +
          skills +
          "\nThe task and the plan:\n"
          "You are in charge of executing the following task: " +
          task + ". The plan is: " + render_plan_literal(plan) + "\n";
      if (b.include_eos) {
        const auto& eos = detail::require_v(b.eos, "EOs");
        out +=
            "Here are the expected outcomes of each step in the plan, which "
            "you can use as a guide:\n" +
            render_dict_literal(eos) + "\n";
      }
      out += environment;
      out +=
          "\nWhat I need you to do:\n"
          "Please define a function do(), which will contain mostly action "
          "primitives to solve the steps of the plan one by one. Please "
          "output python code, enclosed between the tags <code> and </code>. "
          "Please only use the functions I defined above and ensure the "
          "locations and objects that you pass as arguments are correct.";
      return out;
    }
    case PromptRole::ExecutorFollowup: {
      std::string out;
      if (b.feedback_error)
        out += markers::kFeedbackError + *b.feedback_error;
      else
        out += markers::kFeedbackDone;
      out += "\n";
      out += detail::require(b.state_reminder, "state reminder");
      out += "\n";
      const auto& plan = detail::require_v(b.plan, "Plan");
      out += markers::kRemainingPlan + render_plan_literal(plan);
      if (b.current_eo) {
        out += "\n";
        out += markers::kEoGuide;
        out += "\n" + *b.current_eo;
      }
      out +=
          "\nPlease output the python code for the current step of the plan, "
          "enclosed between the tags <code> and </code>.";
      return out;
    }
    case PromptRole::CapSingleShot: {
      const std::string& task = detail::require(b.task, "Task");
      const std::string& skills = detail::require(b.skills, "Skills");
      const std::string& environment =
          detail::require(b.environment, "Environment");
      return "Context:\n"
             "Your are now in charge of a mobile robot equipped with one arm "
             "with a parallel gripper. You will be given a high-level task "
             "that you will need to fulfill using this robot by writing "
             "python code that calls the provided skill functions. The code "
             "is executed once, without feedback.\n"
             "Skills:\n"
             "Here are the functions and skills, with examples of the "
             "syntax:\n" +
             skills +
             "\nThe task:\n"
             "You are in charge of executing the following task: " +
             task + "\n" + environment +
             "\nWhat I need you to do:\n"
             "Please define a function do(), which will contain the full "
             "sequence of action primitives required to carry out the task. "
             "Please output python code, enclosed between the tags <code> "
             "and </code>. Please only use the functions I defined above and "
             "ensure the locations and objects that you pass as arguments "
             "are correct.";
    }
  }
  throw UnboundPlaceholder("unknown prompt role");
}

}  // namespace planloop
