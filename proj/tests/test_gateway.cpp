#include <catch2/catch_amalgamated.hpp>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "planloop/gateway.hpp"
#include "planloop/http_backend.hpp"

using namespace planloop;

TEST_CASE("session records completions and counts tokens") {
  auto backend = std::make_shared<StaticBackend>("three token reply");
  ChatSession session{backend};
  auto [completion, record] = send(session, "hello");
  CHECK(completion == "three token reply");
  CHECK(record.tokens_out == 3);
  CHECK_FALSE(record.tokens_reported);
  CHECK(record.prompt_chars == 5);
  REQUIRE(session.messages.size() == 2);
  CHECK(session.messages[0].role == ChatRole::User);
  CHECK(session.messages[1].role == ChatRole::Assistant);

  auto [second, record2] = send(session, "again");
  (void)second;
  CHECK(record2.prompt_chars == 5 + 17 + 5);
  CHECK(session.records.size() == 2);
}

TEST_CASE("replay backend returns recorded completions exactly") {
  auto live = std::make_shared<StaticBackend>("recorded reply");
  ChatSession original{live};
  send(original, "prompt one");
  send(original, "prompt two");

  std::vector<ReplayRecord> records;
  for (const auto& rec : original.records)
    records.push_back({rec.prompt_hash, rec.completion, 42});

  ChatSession replayed{std::make_shared<ReplayBackend>(records)};
  auto [first, r1] = send(replayed, "prompt one");
  CHECK(first == "recorded reply");
  CHECK(r1.tokens_out == 42);  // recorded value, exactly
  CHECK(r1.tokens_reported);
  auto [second, r2] = send(replayed, "prompt two");
  (void)second;
  CHECK(r2.tokens_out == 42);

  CHECK_THROWS_AS(send(replayed, "prompt three"), ReplayExhausted);
}

TEST_CASE("replay mismatch on diverging prompts") {
  auto live = std::make_shared<StaticBackend>("x");
  ChatSession original{live};
  send(original, "the real prompt");
  std::vector<ReplayRecord> records = {
      {original.records[0].prompt_hash, "x", 1}};
  ChatSession replayed{std::make_shared<ReplayBackend>(records)};
  CHECK_THROWS_AS(send(replayed, "a different prompt"), ReplayMismatch);
}

TEST_CASE("two replays over the same records are byte-identical") {
  std::vector<ReplayRecord> records;
  {
    auto live = std::make_shared<StaticBackend>("deterministic");
    ChatSession original{live};
    send(original, "alpha");
    send(original, "beta");
    for (const auto& rec : original.records)
      records.push_back({rec.prompt_hash, rec.completion, 7});
  }
  auto run = [&] {
    ChatSession s{std::make_shared<ReplayBackend>(records)};
    send(s, "alpha");
    send(s, "beta");
    std::string log;
    for (const auto& m : s.messages) log += chat_role_name(m.role) + m.content;
    for (const auto& r : s.records)
      log += r.prompt_hash + r.completion + std::to_string(r.tokens_out);
    return log;
  };
  CHECK(run() == run());
}

TEST_CASE("session enforces role alternation") {
  auto backend = std::make_shared<StaticBackend>("ok");
  ChatSession session{backend};
  session.messages.push_back({ChatRole::User, "dangling"});
  CHECK_THROWS_AS(send(session, "another user turn"), ConfigError);
}

TEST_CASE("http backend speaks chat completions") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                ++hits;
                auto body = nlohmann::json::parse(req.body);
                REQUIRE(body.at("messages").size() == 1);
                std::string user =
                    body["messages"][0]["content"].get<std::string>();
                nlohmann::json reply;
                reply["choices"] = {{{"message",
                                      {{"role", "assistant"},
                                       {"content", "echo: " + user}}}}};
                reply["usage"] = {{"completion_tokens", 9}};
                res.set_content(reply.dump(), "application/json");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.max_retries = 0;
  auto backend = std::make_shared<HttpBackend>(config);
  ChatSession session{backend};
  auto [completion, record] = send(session, "ping");
  CHECK(completion == "echo: ping");
  CHECK(record.tokens_out == 9);
  CHECK(record.tokens_reported);
  CHECK(hits == 1);

  server.stop();
  server_thread.join();
}

TEST_CASE("http backend surfaces transport errors after retries") {
  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
  config.max_retries = 1;
  config.backoff_ms = 1;
  config.timeout_s = 1;
  auto backend = std::make_shared<HttpBackend>(config);
  ChatSession session{backend};
  CHECK_THROWS_AS(send(session, "ping"), TransportError);
}

TEST_CASE("prompt hash is stable and content-sensitive") {
  std::vector<Message> a = {{ChatRole::User, "hello"}};
  std::vector<Message> b = {{ChatRole::User, "hello"}};
  std::vector<Message> c = {{ChatRole::User, "hello!"}};
  std::vector<Message> d = {{ChatRole::Assistant, "hello"}};
  CHECK(prompt_hash(a) == prompt_hash(b));
  CHECK(prompt_hash(a) != prompt_hash(c));
  CHECK(prompt_hash(a) != prompt_hash(d));
  CHECK(prompt_hash(a).size() == 16);
}
