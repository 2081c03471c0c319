#include <catch2/catch_amalgamated.hpp>

#include "planloop/bench.hpp"
#include "planloop/chaincheck.hpp"
#include "planloop/oracle.hpp"
#include "planloop/taskgen.hpp"

using namespace planloop;

TEST_CASE("gtsg chains verify for every corpus task") {
  Environment env = build_service_env();
  PrimitiveRegistry registry = service_registry(0.10);
  Corpus corpus = generate_corpus(env, 50, 7);
  for (const auto& task : corpus.tasks) {
    WorldState initial = task_initial_state(env, task);
    ChainCheckResult result =
        verify_chain(registry, env, ground_truth_chain(task), initial);
    INFO(task.object << " " << task.source << " -> " << task.target);
    CHECK(result.ok);
  }
}

TEST_CASE("a chain starting with an unafforded grasp fails at index zero") {
  Environment env = build_service_env();
  PrimitiveRegistry registry = service_registry(0.0);
  WorldState initial = env.initial;
  initial.robot_at = "Desk";
  initial.placements["Fork"] = "Coffee table";
  std::vector<PrimitiveCall> chain = {{"grasp", {"Fork"}},
                                      {"move_to", {"Table"}},
                                      {"put_down", {"Fork", "Table"}}};
  ChainCheckResult result = verify_chain(registry, env, chain, initial);
  REQUIRE_FALSE(result.ok);
  CHECK(result.violation_index == 0);
  CHECK(result.violation_message == "robot is not at the Fork's location");
}

TEST_CASE("unparameterized charger chain fails at the plug step") {
  Environment env = build_taskboard_env();
  PrimitiveRegistry registry = industrial_registry(0.0);
  std::vector<PrimitiveCall> chain = {{"move_to", {"Workbench"}},
                                      {"grasp", {"charger"}},
                                      {"plug_in", {"charger", "outlet"}}};
  // the taskboard registry has no move_to; use the two-step form
  std::vector<PrimitiveCall> bare = {{"grasp", {"charger"}},
                                     {"plug_in", {"charger", "outlet"}}};
  ChainCheckResult result = verify_chain(registry, env, bare, env.initial);
  REQUIRE_FALSE(result.ok);
  CHECK(result.violation_index == 1);
  CHECK(result.violation_message == "charger is grasped by the wrong part");

  // the parameterized variant passes: outcome subset relation
  ChainCheckResult parameterized =
      verify_chain(registry, env, charger_chain(), env.initial);
  CHECK(parameterized.ok);

  ChainCheckResult unknown = verify_chain(registry, env, chain, env.initial);
  CHECK_FALSE(unknown.error.empty());  // move_to unknown on the taskboard
}

TEST_CASE("taskboard chain verifies end to end") {
  Environment env = build_taskboard_env();
  PrimitiveRegistry registry = industrial_registry(0.0);
  ChainCheckResult result =
      verify_chain(registry, env, taskboard_chain(), env.initial);
  CHECK(result.ok);
  ChainCheckResult probe =
      verify_chain(registry, env, probe_rack_chain(), env.initial);
  CHECK(probe.ok);
}

namespace {

struct EpisodeRun {
  Environment env = build_service_env();
  std::string instruction;
  GoalSpec goal;
  WorldState initial;
  std::vector<PrimitiveCall> gtsg;

  EpisodeRun() {
    TaskSpec task;
    task.object = "Knife";
    task.source = "Coffee table";
    task.target = "Kitchen table";
    task.seed = 13;
    instruction =
        "Move the Knife to the Kitchen table. It is currently on the Coffee "
        "table.";
    goal = object_at_goal(task.object, task.target);
    initial = env.initial;
    initial.placements["Knife"] = "Coffee table";
    initial.robot_at = "Desk";
    gtsg = ground_truth_chain(task);
  }

  EpisodeTranscript run(Variant variant, OracleConfig faults,
                        double p_fail = 0.0, std::uint64_t seed = 1) {
    PipelineConfig config = variant_config(variant);
    config.grasp_failure_prob = p_fail;
    config.seed = seed;
    auto oracle = std::make_shared<OracleBackend>(env, initial, faults);
    RoleBackends backends{oracle, oracle, oracle};
    return variant == Variant::Cap
               ? run_cap_episode(instruction, goal, env, initial,
                                 service_registry(p_fail), config, backends)
               : run_episode(instruction, goal, env, initial,
                             service_registry(p_fail), config, backends);
  }
};

}  // namespace

TEST_CASE("omitted move classifies as a missing subgoal") {
  EpisodeRun fixture;
  OracleConfig faults;
  faults.omit_move_before_grasp = true;
  EpisodeTranscript t = fixture.run(Variant::Plan, faults);
  REQUIRE(t.outcome != Outcome::Success);
  FailureLabel label = classify_failure(t, fixture.gtsg);
  CHECK(label.kind == FailureLabel::Kind::MissingSubgoal);
  CHECK(contains(label.evidence, "move_to"));
}

TEST_CASE("wrong grasp part classifies as a mischaracterized subgoal") {
  Environment env = build_taskboard_env();
  TaskSpec task = charger_task();
  OracleConfig faults;
  faults.recover_on_feedback = true;
  // EO off: the executor has no part information
  PipelineConfig config = variant_config(Variant::Fb);
  config.grasp_failure_prob = 0.0;

  int failures = 0;
  for (std::uint64_t seed = 0; seed < 40 && failures < 5; ++seed) {
    config.seed = seed;
    auto oracle = std::make_shared<OracleBackend>(env, env.initial, faults);
    RoleBackends backends{oracle, oracle, oracle};
    EpisodeTranscript t =
        run_episode(task.instructions[0], task.goal, env, env.initial,
                    industrial_registry(0.0), config, backends);
    if (t.outcome == Outcome::Success) continue;
    ++failures;
    FailureLabel label = classify_failure(t, charger_chain());
    CHECK(label.kind == FailureLabel::Kind::MischaracterizedSubgoal);
  }
  CHECK(failures == 5);
}

TEST_CASE("unparseable completions classify as code errors") {
  EpisodeRun fixture;
  PipelineConfig config = variant_config(Variant::Full);
  config.grasp_failure_prob = 0.0;
  config.seed = 17;
  auto oracle = std::make_shared<OracleBackend>(fixture.env, fixture.initial,
                                                OracleConfig{});
  auto garbage = std::make_shared<StaticBackend>("I will not write code.");
  RoleBackends backends{oracle, oracle, garbage};
  EpisodeTranscript t =
      run_episode(fixture.instruction, fixture.goal, fixture.env,
                  fixture.initial, service_registry(0.0), config, backends);
  REQUIRE(t.outcome == Outcome::Timeout);
  FailureLabel label = classify_failure(t, fixture.gtsg);
  CHECK(label.kind == FailureLabel::Kind::CodeError);
}

TEST_CASE("unrecovered stochastic failure classifies as primitive failure") {
  EpisodeRun fixture;
  // feedback off, p=1: the lone grasp fails and is never retried
  EpisodeTranscript t = fixture.run(Variant::Plan, {}, 1.0, 23);
  REQUIRE(t.outcome != Outcome::Success);
  FailureLabel label = classify_failure(t, fixture.gtsg);
  CHECK(label.kind == FailureLabel::Kind::PrimitiveFailureUnrecovered);
}

TEST_CASE("classification is deterministic") {
  EpisodeRun fixture;
  OracleConfig faults;
  faults.omit_move_before_grasp = true;
  EpisodeTranscript t = fixture.run(Variant::Plan, faults);
  FailureLabel a = classify_failure(t, fixture.gtsg);
  FailureLabel b = classify_failure(t, fixture.gtsg);
  CHECK(a.kind == b.kind);
  CHECK(a.evidence == b.evidence);
}

TEST_CASE("labels csv lists failures with evidence") {
  EpisodeRun fixture;
  OracleConfig faults;
  faults.omit_move_before_grasp = true;
  EpisodeTranscript failed = fixture.run(Variant::Plan, faults);
  failed.episode_id = "t0-r0";
  failed.task_index = 0;
  EpisodeTranscript good = fixture.run(Variant::Full, {});
  good.episode_id = "t0-r1";
  good.task_index = 0;
  REQUIRE(good.outcome == Outcome::Success);

  Corpus corpus;
  corpus.env = fixture.env;
  TaskSpec task;
  task.object = "Knife";
  task.source = "Coffee table";
  task.target = "Kitchen table";
  task.goal = fixture.goal;
  corpus.tasks.push_back(task);

  std::string csv = labels_csv({failed, good}, &corpus);
  CHECK(contains(csv, "episode_id,task_index,repetition,outcome,label,evidence"));
  CHECK(contains(csv, "MissingSubgoal"));
  CHECK(contains(csv, "t0-r1"));
  // success rows carry no label
  std::size_t line_start = csv.find("t0-r1");
  std::string line = csv.substr(line_start, csv.find('\n', line_start) - line_start);
  CHECK(contains(line, "Success,,"));
}
