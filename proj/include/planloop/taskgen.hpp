#pragma once

#include <string>
#include <vector>

#include "planloop/gateway.hpp"
#include "planloop/parser.hpp"
#include "planloop/world.hpp"

namespace planloop {

class ImpossibleEnv : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskSpec {
  std::string object;
  std::string source;
  std::string target;
  std::vector<std::string> instructions;  // 3 variants
  GoalSpec goal;
  std::uint64_t seed = 0;
};

struct Corpus {
  Environment env;
  std::uint64_t corpus_seed = 0;
  std::vector<TaskSpec> tasks;
};

// The three instruction templates. Every rendering carries the task and the
// object's initial position.
inline std::string render_instruction(const TaskSpec& spec,
                                      int template_index) {
  switch (template_index) {
    case 0:
      return "Move the " + spec.object + " to the " + spec.target +
             ". It is currently on the " + spec.source + ".";
    case 1:
      return "Move the " + spec.object + " from the " + spec.source +
             " to the " + spec.target;
    case 2:
      return "Put the " + spec.object + " on the " + spec.target + ". The " +
             spec.object + " is on the " + spec.source + ".";
    default:
      throw ConfigError("template index out of range: " +
                        std::to_string(template_index));
  }
}

// Randomized pick-and-place corpus: object, source and target sampled
// uniformly with source != target. Duplicate triples are allowed.
inline Corpus generate_corpus(const Environment& env, std::size_t n,
                              std::uint64_t seed) {
  if (env.locations.size() < 2)
    throw ImpossibleEnv("environment needs at least 2 locations");
  if (env.objects.empty())
    throw ImpossibleEnv("environment needs at least 1 object");

  Corpus corpus;
  corpus.env = env;
  corpus.corpus_seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    TaskSpec spec;
    spec.object = env.objects[rng.uniform_index(env.objects.size())].name;
    spec.source = env.locations[rng.uniform_index(env.locations.size())].name;
    do {
      spec.target =
          env.locations[rng.uniform_index(env.locations.size())].name;
    } while (spec.target == spec.source);
    spec.seed = derive_seed(seed, i, 0x7461736b);
    int first_template = static_cast<int>(rng.uniform_index(3));
    for (int k = 0; k < 3; ++k)
      spec.instructions.push_back(
          render_instruction(spec, (first_template + k) % 3));
    spec.goal = object_at_goal(spec.object, spec.target);
    corpus.tasks.push_back(std::move(spec));
  }
  return corpus;
}

// The reference subgoal chain: each consecutive transition needs exactly
// one primitive.
inline std::vector<PrimitiveCall> ground_truth_chain(const TaskSpec& spec) {
  return {{"move_to", {spec.source}},
          {"grasp", {spec.object}},
          {"move_to", {spec.target}},
          {"put_down", {spec.object, spec.target}}};
}

// Episode initial state: the task object pinned at its source, distractors
// and the robot start drawn from the task seed (fixed across repetitions).
inline WorldState task_initial_state(const Environment& env,
                                     const TaskSpec& spec) {
  return seeded_initial_state(env, {{spec.object, spec.source}}, spec.seed);
}

inline bool instruction_mentions_names(const std::string& instruction,
                                       const TaskSpec& spec) {
  return contains(instruction, spec.object) &&
         contains(instruction, spec.source) &&
         contains(instruction, spec.target);
}

// Replaces instruction variants 1 and 2 with backend paraphrases of variant
// 0. A paraphrase must carry the object, source and target names verbatim;
// failures are regenerated up to the retry limit, then the template
// rendering stays.
inline void paraphrase_corpus(Corpus& corpus,
                              const std::shared_ptr<Backend>& backend,
                              int retry_limit = 3) {
  for (auto& spec : corpus.tasks) {
    for (int variant = 1; variant <= 2; ++variant) {
      std::string accepted;
      for (int attempt = 0; attempt < retry_limit && accepted.empty();
           ++attempt) {
        ChatSession session{backend};
        std::string prompt =
            "Rewrite the following robot task instruction with different "
            "wording. Keep the object name '" +
            spec.object + "', the location '" + spec.source +
            "' and the location '" + spec.target +
            "' verbatim, and keep both the task and the information about "
            "the initial position of the object. Output only the rewritten "
            "instruction, no other text.\nInstruction: " +
            spec.instructions[0];
        auto [completion, record] = send(session, prompt);
        (void)record;
        std::string candidate = trim(completion);
        if (instruction_mentions_names(candidate, spec)) accepted = candidate;
      }
      if (!accepted.empty())
        spec.instructions[static_cast<std::size_t>(variant)] = accepted;
    }
  }
}

// --- corpus JSON -----------------------------------------------------------------

inline Json to_json(const Corpus& corpus) {
  Json j;
  j["env"] = to_json(corpus.env);
  j["corpus_seed"] = corpus.corpus_seed;
  Json tasks = Json::array();
  for (const auto& spec : corpus.tasks) {
    Json jt;
    jt["object"] = spec.object;
    jt["source"] = spec.source;
    jt["target"] = spec.target;
    jt["instructions"] = spec.instructions;
    jt["goal"] = to_json(spec.goal);
    jt["seed"] = spec.seed;
    tasks.push_back(jt);
  }
  j["tasks"] = tasks;
  return j;
}

inline Corpus corpus_from_json(const Json& j) {
  Corpus corpus;
  corpus.env = environment_from_json(j.at("env"));
  corpus.corpus_seed = j.value("corpus_seed", std::uint64_t{0});
  for (const auto& jt : j.at("tasks")) {
    TaskSpec spec;
    spec.object = jt.at("object").get<std::string>();
    spec.source = jt.at("source").get<std::string>();
    spec.target = jt.at("target").get<std::string>();
    spec.instructions = jt.at("instructions").get<std::vector<std::string>>();
    spec.goal = goal_from_json(jt.at("goal"));
    spec.seed = jt.value("seed", std::uint64_t{0});
    corpus.tasks.push_back(std::move(spec));
  }
  return corpus;
}

// --- hand-authored industrial fixtures ---------------------------------------------

inline TaskSpec charger_task() {
  TaskSpec spec;
  spec.object = "charger";
  spec.source = "Workbench";
  spec.target = "Workbench";
  spec.instructions = {"Plug the charger in the outlet.",
                       "Plug the charger cable in the outlet.",
                       "Please plug the charger into the outlet."};
  spec.goal = fluent_goal("charger_plugged");
  spec.seed = 0x636861;
  return spec;
}

inline TaskSpec probe_rack_task() {
  TaskSpec spec;
  spec.object = "probe";
  spec.source = "Workbench";
  spec.target = "Workbench";
  spec.instructions = {"Put the voltage probe in its rack.",
                       "Place the probe in its rack.",
                       "Please put the probe into its rack."};
  spec.goal = fluent_goal("probe_racked");
  spec.seed = 0x70726f;
  return spec;
}

inline TaskSpec taskboard_task() {
  TaskSpec spec;
  spec.object = "probe cable";
  spec.source = "Workbench";
  spec.target = "Workbench";
  spec.instructions = {
      "Solve the task board: press the blue button, plug in the probe "
      "cable, press the red button and open the trapdoor.",
      "Work through the task board: blue button first, then plug in the "
      "probe cable, then the red button, and finally open the trapdoor.",
      "Complete the task board sequence: press the blue button, plug in "
      "the probe cable, press the red button, open the trapdoor."};
  GoalSpec goal;
  goal.ordered = true;
  goal.conditions = {
      {GoalCondition::Kind::FluentTrue, "", "", "button_blue_pressed", ""},
      {GoalCondition::Kind::FluentTrue, "", "", "probe_cable_plugged", ""},
      {GoalCondition::Kind::FluentTrue, "", "", "button_red_pressed", ""},
      {GoalCondition::Kind::FluentTrue, "", "", "trapdoor_open", ""}};
  spec.goal = goal;
  spec.seed = 0x626f61;
  return spec;
}

inline std::vector<PrimitiveCall> taskboard_chain() {
  return {{"press_button", {"blue"}},
          {"grasp", {"probe cable", "plug"}},
          {"plug_in", {"probe cable", "board"}},
          {"press_button", {"red"}},
          {"open_trapdoor", {}}};
}

inline std::vector<PrimitiveCall> charger_chain() {
  return {{"grasp", {"charger", "plug"}}, {"plug_in", {"charger", "outlet"}}};
}

inline std::vector<PrimitiveCall> probe_rack_chain() {
  return {{"grasp", {"probe", "handle"}}, {"place_in_rack", {"probe"}}};
}

}  // namespace planloop
