#include <catch2/catch_amalgamated.hpp>

#include "planloop/prompts.hpp"
#include "planloop/primitives.hpp"
#include "planloop/world.hpp"

using namespace planloop;

namespace {

PromptBindings service_bindings() {
  PromptBindings b;
  b.task = "Move the Fork to the Desk. It is on the Table.";
  b.plan = {"Move to the Table", "Grasp the Fork", "Move to the Desk",
            "Put down the Fork on the Desk"};
  b.eos = {{"Move to the Table", "The robot should be at the Table."},
           {"Grasp the Fork", "The Fork should be in the robot's gripper."},
           {"Move to the Desk", "The robot should be at the Desk."},
           {"Put down the Fork on the Desk", "The Fork should be on the Desk."}};
  b.skills = skill_headers(service_registry());
  Environment env = build_service_env();
  b.environment = render_environment_block(env, env.initial);
  return b;
}

}  // namespace

TEST_CASE("planner prompt carries the task and the output contract") {
  PromptBindings b = service_bindings();
  std::string prompt = render_prompt(PromptRole::Planner, b);
  CHECK(contains(prompt, "tuple of strings"));
  CHECK(contains(prompt, *b.task));
  CHECK(contains(prompt, "mobile robot with an arm ending in a gripper"));
  CHECK(contains(prompt,
                 "should always move to a location before interacting"));
}

TEST_CASE("eo prompt embeds a dictionary template with one key per step") {
  PromptBindings b = service_bindings();
  std::string prompt = render_prompt(PromptRole::Eo, b);
  CHECK(contains(prompt, "fill out the following python dictionary"));
  CHECK(contains(prompt,
                 "- Grasp the mug: The mug should be in the robot's gripper."));
  // 4 plan steps -> 4 empty-valued keys
  std::size_t empties = 0;
  for (std::size_t at = prompt.find(": ''"); at != std::string::npos;
       at = prompt.find(": ''", at + 1))
    ++empties;
  CHECK(empties == 4);
  for (const auto& step : *b.plan) CHECK(contains(prompt, py_quote(step)));
}

TEST_CASE("executor prompt includes EOs only when enabled") {
  PromptBindings with = service_bindings();
  std::string on = render_prompt(PromptRole::ExecutorInitial, with);
  CHECK(contains(on, "expected outcomes"));
  CHECK(contains(on, "define a function do()"));
  CHECK(contains(on, "<code> and </code>"));
  CHECK(contains(on, "Skills:"));
  CHECK(contains(on, "Environment:"));

  PromptBindings without = service_bindings();
  without.include_eos = false;
  without.eos.reset();
  std::string off = render_prompt(PromptRole::ExecutorInitial, without);
  CHECK_FALSE(contains(off, "expected outcomes"));

  PromptBindings missing = service_bindings();
  missing.eos.reset();
  CHECK_THROWS_AS(render_prompt(PromptRole::ExecutorInitial, missing),
                  UnboundPlaceholder);
}

TEST_CASE("prompt rendering is byte-deterministic") {
  PromptBindings b = service_bindings();
  for (PromptRole role :
       {PromptRole::Planner, PromptRole::Eo, PromptRole::ExecutorInitial}) {
    CHECK(render_prompt(role, b) == render_prompt(role, b));
  }
}

TEST_CASE("follow-up prompt formats feedback, reminder, plan and eo") {
  Environment env = build_service_env();
  WorldState state = env.initial;
  state.robot_at = "Desk";
  state.placements.erase("Fork");
  state.gripper = GripperContent{"Fork", std::nullopt};

  PromptBindings b;
  b.state_reminder = render_state_reminder(state);
  b.plan = std::vector<std::string>{"Put down the Fork on the Desk"};
  b.current_eo = "The Fork should be on the Desk.";
  std::string done = render_prompt(PromptRole::ExecutorFollowup, b);
  CHECK(done.rfind("Feedback: Done\n", 0) == 0);
  CHECK(contains(done, "The robot is at the 'Desk' location."));
  CHECK(contains(done, "The gripper holds the 'Fork'."));
  CHECK(contains(done, "The plan is: ('Put down the Fork on the Desk',)"));
  CHECK(contains(done, "The Fork should be on the Desk."));

  b.feedback_error = "robot is not at the Knife's location";
  std::string error = render_prompt(PromptRole::ExecutorFollowup, b);
  CHECK(error.rfind("Feedback: Error: robot is not at the Knife's location",
                    0) == 0);
}

TEST_CASE("state reminder shows the held part") {
  Environment env = build_taskboard_env();
  WorldState state = env.initial;
  state.placements.erase("charger");
  state.gripper = GripperContent{"charger", "cable"};
  std::string reminder = render_state_reminder(state);
  CHECK(contains(reminder, "The gripper holds the 'charger' (by the 'cable' "
                           "part)."));

  state.gripper.reset();
  state.placements["charger"] = "Workbench";
  CHECK(contains(render_state_reminder(state), "The gripper is empty."));
}

TEST_CASE("environment block lists catalogs and initial placements") {
  Environment env = build_taskboard_env();
  std::string block = render_environment_block(env, env.initial);
  CHECK(contains(block, "Locations: ('Workbench',)"));
  CHECK(contains(block, "'charger (parts: plug, cable)'"));
  CHECK(contains(block, "Object locations: {"));
  CHECK(contains(block, "The robot starts at the 'Workbench' location."));
}
