#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "planloop/cli.hpp"

using namespace planloop;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("planloop");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("planloop_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("gen-corpus writes a loadable corpus") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "--env", "service", "-n", "50", "--seed", "7",
                   "-o", corpus_path}) == 0);
  Corpus corpus = corpus_from_json(Json::parse(slurp(corpus_path)));
  CHECK(corpus.tasks.size() == 50);
  CHECK(corpus.corpus_seed == 7);
}

TEST_CASE("run-corpus with the oracle emits transcripts and reports") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "6", "--seed", "3", "-o",
                   corpus_path}) == 0);
  std::string transcripts = dir.file("transcripts.jsonl");
  std::string report_json = dir.file("report.json");
  REQUIRE(run_cli({"--backend", "oracle", "--p-fail", "0", "run-corpus",
                   "--corpus", corpus_path, "--variant", "full", "--reps", "3",
                   "-o", transcripts, "--report-json", report_json}) == 0);

  Json report = Json::parse(slurp(report_json));
  CHECK(report["rows"][0]["success_rate_mean"] == 100.0);
  CHECK(report["rows"][0]["exec_calls_mean"] == 4.0);

  // the transcripts replay to a byte-identical report
  std::string replay_report = dir.file("replay_report.json");
  REQUIRE(run_cli({"replay", "--transcripts", transcripts, "--report-json",
                   replay_report}) == 0);
  Json replayed = Json::parse(slurp(replay_report));
  CHECK(replayed["rows"].dump() == report["rows"].dump());
}

TEST_CASE("classify writes a labels csv") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "4", "--seed", "5", "-o",
                   corpus_path}) == 0);
  std::string transcripts = dir.file("transcripts.jsonl");
  REQUIRE(run_cli({"--backend", "oracle", "--p-fail", "0",
                   "--oracle-omit-move", "run-corpus", "--corpus", corpus_path,
                   "--variant", "plan", "--reps", "1", "-o",
                   transcripts}) == 0);
  std::string labels = dir.file("labels.csv");
  REQUIRE(run_cli({"classify", "--transcripts", transcripts, "--corpus",
                   corpus_path, "-o", labels}) == 0);
  std::string csv = slurp(labels);
  CHECK(contains(csv, "MissingSubgoal"));
}

TEST_CASE("verify-chain distinguishes ok, violation and usage errors") {
  TempDir dir;
  std::string good = dir.file("good.json");
  {
    Json j;
    j["env_kind"] = "taskboard";
    j["chain"] = Json::array();
    for (const auto& call : taskboard_chain()) {
      Json c;
      c["name"] = call.name;
      c["args"] = call.args;
      j["chain"].push_back(c);
    }
    std::ofstream(good) << j.dump();
  }
  CHECK(run_cli({"verify-chain", "--chain", good}) == 0);

  std::string bad = dir.file("bad.json");
  {
    Json j;
    j["env_kind"] = "taskboard";
    j["chain"] = {{{"name", "grasp"}, {"args", {"charger"}}},
                  {{"name", "plug_in"}, {"args", {"charger", "outlet"}}}};
    std::ofstream(bad) << j.dump();
  }
  CHECK(run_cli({"verify-chain", "--chain", bad}) == 1);

  CHECK(run_cli({"verify-chain", "--chain", dir.file("missing.json")}) == 2);
}

TEST_CASE("report aggregates transcripts from files") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "3", "--seed", "2", "-o",
                   corpus_path}) == 0);
  std::string transcripts = dir.file("t.jsonl");
  REQUIRE(run_cli({"--backend", "oracle", "--p-fail", "0", "run-corpus",
                   "--corpus", corpus_path, "--variant", "eo", "--reps", "2",
                   "-o", transcripts}) == 0);
  std::string out = dir.file("report.md");
  REQUIRE(run_cli({"report", "--transcripts", transcripts, "--format",
                   "markdown", "-o", out}) == 0);
  CHECK(contains(slurp(out), "| eo |"));
}

TEST_CASE("run-task runs corpus entries and raw instructions") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "3", "--seed", "4", "-o",
                   corpus_path}) == 0);
  CHECK(run_cli({"--backend", "oracle", "--p-fail", "0", "run-task",
                 "--corpus", corpus_path, "--task-id", "1"}) == 0);
  CHECK(run_cli({"--backend", "oracle", "--p-fail", "0", "run-task",
                 "--instruction",
                 "Move the Fork from the Desk to the Kitchen counter"}) == 0);
  std::string transcript = dir.file("charger.jsonl");
  CHECK(run_cli({"--backend", "oracle", "run-task", "--fixture", "charger",
                 "--variant", "full", "-o", transcript}) == 0);
  CHECK(contains(slurp(transcript), "charger"));
}

TEST_CASE("gen-corpus with oracle paraphrases keeps names verbatim") {
  TempDir dir;
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"--backend", "oracle", "gen-corpus", "-n", "4", "--seed",
                   "11", "-o", corpus_path, "--paraphrase"}) == 0);
  Corpus corpus = corpus_from_json(Json::parse(slurp(corpus_path)));
  for (const auto& task : corpus.tasks) {
    CHECK(task.instructions[1] != render_instruction(task, 1));
    for (const auto& instruction : task.instructions)
      CHECK(instruction_mentions_names(instruction, task));
  }
}

TEST_CASE("explicit flags override the config file") {
  TempDir dir;
  std::string config = dir.file("config.json");
  {
    Json j;
    j["backend"] = {{"kind", "replay"}};
    j["p_fail"] = 0.5;
    std::ofstream(config) << j.dump();
  }
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "2", "--seed", "1", "-o",
                   corpus_path}) == 0);
  // config alone selects replay (without transcripts this is an error)
  CHECK(run_cli({"--config", config, "run-task", "--corpus", corpus_path,
                 "--task-id", "0"}) == 2);
  // the flag wins over the config file
  CHECK(run_cli({"--config", config, "--backend", "oracle", "--p-fail", "0",
                 "run-task", "--corpus", corpus_path, "--task-id", "0"}) == 0);
}

TEST_CASE("config file can bind backends per role") {
  TempDir dir;
  std::string config = dir.file("config.json");
  {
    Json j;
    j["backend"] = {{"kind", "oracle"}};
    j["backends"] = {{"executor", {{"kind", "static"},
                                   {"text", "no code, sorry"}}}};
    std::ofstream(config) << j.dump();
  }
  std::string corpus_path = dir.file("corpus.json");
  REQUIRE(run_cli({"gen-corpus", "-n", "2", "--seed", "6", "-o",
                   corpus_path}) == 0);
  std::string transcripts = dir.file("t.jsonl");
  REQUIRE(run_cli({"--config", config, "--p-fail", "0", "run-corpus",
                   "--corpus", corpus_path, "--variant", "full", "--reps", "1",
                   "-o", transcripts}) == 0);
  // oracle planner produced 4-step plans; the static executor never parses,
  // so every episode times out at exactly 8 interactions
  auto episodes = transcripts_from_records(read_jsonl_file(transcripts));
  REQUIRE(episodes.size() == 2);
  for (const auto& t : episodes) {
    CHECK(t.outcome == Outcome::Timeout);
    CHECK(t.metrics.execution_calls == 8);
    for (const auto& ia : t.interactions)
      CHECK(ia.completion == "no code, sorry");
  }
}

TEST_CASE("usage and config errors exit with code 2") {
  CHECK(run_cli({"definitely-not-a-subcommand"}) == 2);
  CHECK(run_cli({"run-corpus"}) == 2);  // missing required --corpus
  CHECK(run_cli({"--backend", "replay", "run-task", "--instruction",
                 "Move the Fork from the Desk to the Table"}) == 2);
  CHECK(run_cli({"--backend", "nonsense", "run-task", "--instruction",
                 "Move the Fork from the Desk to the Table"}) == 2);
}
