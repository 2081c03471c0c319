#include <catch2/catch_amalgamated.hpp>

#include "planloop/parser.hpp"
#include "planloop/util.hpp"

using namespace planloop;

TEST_CASE("extract_code basics") {
  auto ok = extract_code(
      "Sure!\n<code>\ndef do():\n    move_to('Desk')\n</code>");
  REQUIRE(ok.ok());
  CHECK(*ok == "\ndef do():\n    move_to('Desk')\n");

  auto missing = extract_code("no tags here");
  REQUIRE_FALSE(missing.ok());
  CHECK(missing.error->kind == ParseError::Kind::MissingTags);

  auto two_pairs = extract_code(
      "<code>move_to('A')</code> and again <code>move_to('B')</code>");
  REQUIRE(two_pairs.ok());
  CHECK(*two_pairs == "move_to('A')");

  auto fenced = extract_code(
      "Here you go:\n```python\n<code>\nmove_to('Desk')\n</code>\n```\n");
  REQUIRE(fenced.ok());
  CHECK(contains(*fenced, "move_to('Desk')"));
}

TEST_CASE("parse_snippet accepts the wrapper grammar") {
  auto program = parse_snippet(
      "def do():\n    move_to('Kitchen table')\n    grasp(\"Water "
      "Glass\")\ndo()");
  REQUIRE(program.ok());
  REQUIRE(program->calls.size() == 2);
  CHECK(program->calls[0] == PrimitiveCall{"move_to", {"Kitchen table"}});
  CHECK(program->calls[1] == PrimitiveCall{"grasp", {"Water Glass"}});
}

TEST_CASE("parse_snippet rejects unsupported constructs with line numbers") {
  auto loop = parse_snippet("def do():\n    for i in range(2):\n        grasp('Fork')");
  REQUIRE_FALSE(loop.ok());
  CHECK(loop.error->message == "loops are not supported (line 2)");

  auto conditional = parse_snippet("if True:\n    grasp('Fork')");
  REQUIRE_FALSE(conditional.ok());
  CHECK(conditional.error->message == "conditionals are not supported (line 1)");

  auto assignment = parse_snippet("x = grasp('Fork')");
  REQUIRE_FALSE(assignment.ok());
  CHECK(assignment.error->message == "assignments are not supported (line 1)");

  auto nested = parse_snippet("def do():\n    def inner():\n        grasp('Fork')");
  REQUIRE_FALSE(nested.ok());
  CHECK(nested.error->message ==
        "nested function definitions are not supported (line 2)");

  auto bare_arg = parse_snippet("grasp(Fork)");
  REQUIRE_FALSE(bare_arg.ok());
  CHECK(bare_arg.error->message ==
        "arguments must be quoted string literals (line 1)");

  auto unbalanced = parse_snippet("grasp('Fork'");
  REQUIRE_FALSE(unbalanced.ok());
  CHECK(unbalanced.error->message == "unbalanced parentheses (line 1)");

  auto bad_quote = parse_snippet("grasp('Fork)");
  REQUIRE_FALSE(bad_quote.ok());
  CHECK(bad_quote.error->message == "unbalanced quotes (line 1)");

  auto empty = parse_snippet("def do():\n    # nothing\ndo()");
  REQUIRE_FALSE(empty.ok());
  CHECK(empty.error->message == "no primitive calls found");
}

TEST_CASE("parse_snippet tolerates wrapper-free code, comments and fences") {
  auto bare = parse_snippet("move_to('Desk')");
  REQUIRE(bare.ok());
  CHECK(bare->calls == std::vector<PrimitiveCall>{{"move_to", {"Desk"}}});

  auto noisy = parse_snippet(
      "```python\n# plan step 1\ndef do():\n    move_to('Desk')  # go\n\n    "
      "put_down('Fork', 'Desk')\ndo()\n```");
  REQUIRE(noisy.ok());
  REQUIRE(noisy->calls.size() == 2);
  CHECK(noisy->calls[1] == PrimitiveCall{"put_down", {"Fork", "Desk"}});

  auto escapes = parse_snippet("grasp('it\\'s', \"a \\\"b\\\"\")");
  REQUIRE(escapes.ok());
  CHECK(escapes->calls[0].args == std::vector<std::string>{"it's", "a \"b\""});
}

TEST_CASE("snippet round trip") {
  Rng rng(31337);
  const std::vector<std::string> names = {"move_to", "grasp", "put_down",
                                          "press_button", "plug_in"};
  const std::vector<std::string> words = {
      "Desk",   "Coffee table", "Water Glass", "it's",
      "a\"b",   "tab\there",    "back\\slash", "charger",
      "O'Hara", "new\nline"};
  for (int trial = 0; trial < 1000; ++trial) {
    SnippetProgram program;
    std::size_t calls = 1 + rng.uniform_index(5);
    for (std::size_t c = 0; c < calls; ++c) {
      PrimitiveCall call;
      call.name = names[rng.uniform_index(names.size())];
      std::size_t argc = rng.uniform_index(3);
      for (std::size_t a = 0; a < argc; ++a)
        call.args.push_back(words[rng.uniform_index(words.size())]);
      program.calls.push_back(std::move(call));
    }
    std::string printed = print_snippet(program);
    auto reparsed = parse_snippet(printed);
    REQUIRE(reparsed.ok());
    CHECK(*reparsed == program);
  }
}

TEST_CASE("parsing is total over fuzzed inputs") {
  Rng rng(4242);
  const std::string alphabet =
      "abcdefghijklmnop()'\",:=#\n\t {}[]<>/\\.0123456789";
  for (int trial = 0; trial < 4000; ++trial) {
    std::string input;
    std::size_t len = rng.uniform_index(160);
    for (std::size_t i = 0; i < len; ++i)
      input += alphabet[rng.uniform_index(alphabet.size())];
    // must never throw or crash; typed results only
    auto a = extract_code(input);
    auto b = parse_snippet(input);
    auto c = parse_plan(input);
    auto d = parse_dict_literal(input);
    CHECK((a.ok() || a.error.has_value()));
    CHECK((b.ok() || b.error.has_value()));
    CHECK((c.ok() || c.error.has_value()));
    CHECK((d.ok() || d.error.has_value()));
  }
}

TEST_CASE("extract_code inverts embedding in prose") {
  Rng rng(555);
  const std::string alphabet = "abc ()'\"\n\t{}";
  for (int trial = 0; trial < 300; ++trial) {
    std::string snippet;
    std::size_t len = rng.uniform_index(60);
    for (std::size_t i = 0; i < len; ++i)
      snippet += alphabet[rng.uniform_index(alphabet.size())];
    std::string prose_before = "Sure, here is the code you asked for:\n";
    std::string prose_after = "\nLet me know how it goes.";
    auto out = extract_code(prose_before + "<code>" + snippet + "</code>" +
                            prose_after);
    REQUIRE(out.ok());
    CHECK(*out == snippet);
  }
}

TEST_CASE("parse_plan literal forms") {
  auto tuple = parse_plan(
      "('Move to the Kitchen table', 'Grasp the Water Glass')");
  REQUIRE(tuple.ok());
  REQUIRE(tuple->size() == 2);
  CHECK((*tuple)[0] == "Move to the Kitchen table");

  auto list = parse_plan("[\"Step A\"]");
  REQUIRE(list.ok());
  CHECK(*list == std::vector<std::string>{"Step A"});

  auto none = parse_plan("I think the plan is: ...");
  REQUIRE_FALSE(none.ok());
  CHECK(none.error->kind == ParseError::Kind::Syntax);

  auto multiline = parse_plan(
      "```\n(\n  '1. Move to the Desk',\n  '2. Grasp the Pills',\n)\n```");
  REQUIRE(multiline.ok());
  REQUIRE(multiline->size() == 2);
  CHECK((*multiline)[0] == "Move to the Desk");
  CHECK((*multiline)[1] == "Grasp the Pills");

  auto prose_then_tuple = parse_plan("The plan (simple) is ('A', 'B')");
  REQUIRE(prose_then_tuple.ok());
  CHECK(prose_then_tuple->size() == 2);

  auto empty = parse_plan("()");
  REQUIRE(empty.ok());
  CHECK(empty->empty());
}

TEST_CASE("parse_eo_map alignment") {
  std::vector<std::string> plan = {"Grasp the mug"};
  auto exact = parse_eo_map(
      "{'Grasp the mug': 'The mug should be in the robot''s gripper.'}", plan);
  REQUIRE(exact.ok());
  REQUIRE(exact->size() == 1);
  CHECK((*exact)[0].first == "Grasp the mug");

  auto empty = parse_eo_map("{}", {});
  REQUIRE(empty.ok());
  CHECK(empty->empty());

  std::vector<std::string> four = {"a", "b", "c", "d"};
  auto mismatch = parse_eo_map("{'x': '1', 'y': '2', 'z': '3'}", four);
  REQUIRE_FALSE(mismatch.ok());
  CHECK(mismatch.error->kind == ParseError::Kind::KeyMismatch);

  // paraphrased keys fall back to index order when the counts match
  std::vector<std::string> two = {"Move to the Desk", "Grasp the Pills"};
  auto index = parse_eo_map(
      "{'move': 'The robot should be at the Desk.', 'grab': 'The Pills "
      "should be in the gripper.'}",
      two);
  REQUIRE(index.ok());
  CHECK((*index)[0].first == "Move to the Desk");
  CHECK((*index)[0].second == "The robot should be at the Desk.");

  auto no_literal = parse_eo_map("cannot help", two);
  REQUIRE_FALSE(no_literal.ok());
  CHECK(no_literal.error->kind == ParseError::Kind::Syntax);
}

TEST_CASE("plan literal rendering round trips") {
  std::vector<std::string> steps = {"Move to the Desk", "Grasp the O'Hara"};
  auto parsed = parse_plan(render_plan_literal(steps));
  REQUIRE(parsed.ok());
  CHECK(*parsed == steps);

  auto single = parse_plan(render_plan_literal({"only"}));
  REQUIRE(single.ok());
  CHECK(single->size() == 1);

  auto empty = parse_plan(render_plan_literal({}));
  REQUIRE(empty.ok());
  CHECK(empty->empty());
}
