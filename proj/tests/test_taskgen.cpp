#include <catch2/catch_amalgamated.hpp>

#include "planloop/taskgen.hpp"
#include "planloop/primitives.hpp"

using namespace planloop;

TEST_CASE("corpus generation is seeded and reproducible") {
  Environment env = build_service_env();
  Corpus a = generate_corpus(env, 50, 7);
  Corpus b = generate_corpus(env, 50, 7);
  REQUIRE(a.tasks.size() == 50);
  CHECK(to_json(a).dump() == to_json(b).dump());

  Corpus c = generate_corpus(env, 50, 8);
  CHECK(to_json(a).dump() != to_json(c).dump());
}

TEST_CASE("every generated task has distinct source and target") {
  Environment env = build_service_env();
  Corpus corpus = generate_corpus(env, 50, 7);
  for (const auto& task : corpus.tasks) {
    CHECK(task.source != task.target);
    CHECK(env.find_object(task.object) != nullptr);
    CHECK(env.has_location(task.source));
    CHECK(env.has_location(task.target));
    CHECK(task.instructions.size() == 3);
  }
}

TEST_CASE("degenerate environments are rejected") {
  Environment env = build_service_env();
  env.locations = {{"Only"}};
  CHECK_THROWS_AS(generate_corpus(env, 5, 1), ImpossibleEnv);

  Environment no_objects = build_service_env();
  no_objects.objects.clear();
  no_objects.initial.placements.clear();
  CHECK_THROWS_AS(generate_corpus(no_objects, 5, 1), ImpossibleEnv);
}

TEST_CASE("instruction templates render the known surface forms") {
  TaskSpec glass;
  glass.object = "Water Glass";
  glass.source = "Kitchen table";
  glass.target = "Coffee table";
  CHECK(render_instruction(glass, 0) ==
        "Move the Water Glass to the Coffee table. It is currently on the "
        "Kitchen table.");

  TaskSpec pills;
  pills.object = "Pills";
  pills.source = "Desk";
  pills.target = "Kitchen counter";
  CHECK(render_instruction(pills, 1) ==
        "Move the Pills from the Desk to the Kitchen counter");

  TaskSpec mouse;
  mouse.object = "Mouse";
  mouse.source = "Desk";
  mouse.target = "Table";
  CHECK(render_instruction(mouse, 2) ==
        "Put the Mouse on the Table. The Mouse is on the Desk.");

  CHECK_THROWS_AS(render_instruction(mouse, 3), ConfigError);
}

TEST_CASE("instructions always mention object, source and target") {
  Environment env = build_service_env();
  Corpus corpus = generate_corpus(env, 50, 21);
  for (const auto& task : corpus.tasks)
    for (const auto& instruction : task.instructions)
      CHECK(instruction_mentions_names(instruction, task));
}

TEST_CASE("ground truth chain shape") {
  TaskSpec task;
  task.object = "Fork";
  task.source = "Coffee table";
  task.target = "Kitchen table";
  auto chain = ground_truth_chain(task);
  REQUIRE(chain.size() == 4);
  CHECK(chain[0] == PrimitiveCall{"move_to", {"Coffee table"}});
  CHECK(chain[1] == PrimitiveCall{"grasp", {"Fork"}});
  CHECK(chain[2] == PrimitiveCall{"move_to", {"Kitchen table"}});
  CHECK(chain[3] == PrimitiveCall{"put_down", {"Fork", "Kitchen table"}});
}

TEST_CASE("executing the chain at p zero satisfies the goal for every task") {
  Environment env = build_service_env();
  PrimitiveRegistry registry = service_registry(0.0);
  Corpus corpus = generate_corpus(env, 50, 7);
  for (const auto& task : corpus.tasks) {
    WorldState state = task_initial_state(env, task);
    REQUIRE(validate_state(state, env).empty());
    Rng rng(task.seed);
    for (const auto& call : ground_truth_chain(task)) {
      const PrimitiveSpec* spec = registry.find(call.name);
      REQUIRE(spec != nullptr);
      ExecOutcome outcome = execute(*spec, env, state, call.args, rng);
      REQUIRE(outcome.kind == ExecOutcome::Kind::Success);
      state = outcome.state;
    }
    CHECK(goal_satisfied(state, task.goal));
  }
}

TEST_CASE("corpus json round trip") {
  Environment env = build_service_env();
  Corpus corpus = generate_corpus(env, 10, 3);
  Corpus back = corpus_from_json(to_json(corpus));
  CHECK(to_json(back).dump() == to_json(corpus).dump());
}

namespace {

// Paraphrase double: returns a canned line per prompt, cycling.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> lines)
      : lines_(std::move(lines)) {}
  BackendCompletion complete(const std::vector<Message>&) override {
    const std::string& line = lines_[std::min(cursor_, lines_.size() - 1)];
    ++cursor_;
    return {line, std::nullopt};
  }
  std::string kind() const override { return "scripted"; }
  std::size_t calls() const { return cursor_; }

 private:
  std::vector<std::string> lines_;
  std::size_t cursor_ = 0;
};

}  // namespace

TEST_CASE("paraphrases are validated for verbatim names") {
  Environment env = build_service_env();
  Corpus corpus = generate_corpus(env, 1, 5);
  TaskSpec& task = corpus.tasks[0];

  // First answer drops the source; it must be regenerated. Second and third
  // answers are valid.
  std::string good1 = "Please take the " + task.object + " over to the " +
                      task.target + "; right now it sits on the " +
                      task.source + ".";
  std::string good2 = "Carry the " + task.object + " from the " + task.source +
                      " across to the " + task.target + ".";
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{
      "Move the " + task.object + " to the " + task.target + ".",  // no source
      good1, good2});
  paraphrase_corpus(corpus, backend);
  CHECK(corpus.tasks[0].instructions[1] == good1);
  CHECK(corpus.tasks[0].instructions[2] == good2);
  CHECK(backend->calls() == 3);
}

TEST_CASE("paraphrase fallback keeps the template renderings") {
  Environment env = build_service_env();
  Corpus corpus = generate_corpus(env, 1, 5);
  std::vector<std::string> before = corpus.tasks[0].instructions;
  auto hopeless =
      std::make_shared<ScriptedBackend>(std::vector<std::string>{"nope"});
  paraphrase_corpus(corpus, hopeless, 2);
  CHECK(corpus.tasks[0].instructions == before);
  CHECK(hopeless->calls() == 4);  // 2 retries x 2 variants
}

TEST_CASE("industrial fixture tasks resolve against the taskboard env") {
  Environment env = build_taskboard_env();
  for (const TaskSpec& task :
       {charger_task(), probe_rack_task(), taskboard_task()}) {
    for (const auto& c : task.goal.conditions)
      CHECK(env.initial.fluents.count(c.fluent) == 1);
  }
  CHECK(taskboard_chain().size() == 5);
  CHECK(charger_chain().size() == 2);
  CHECK(probe_rack_chain().size() == 2);
}
