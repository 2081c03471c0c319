#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "planloop/util.hpp"

namespace planloop {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ChatRole { System, User, Assistant };

inline const char* chat_role_name(ChatRole r) {
  switch (r) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "?";
}

struct Message {
  ChatRole role = ChatRole::User;
  std::string content;
};

// Stable across runs and toolchains; recorded in transcripts and compared
// by the replay backend.
inline std::string prompt_hash(const std::vector<Message>& messages) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& m : messages) {
    h = fnv1a64(chat_role_name(m.role), h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(m.content, h);
    h = fnv1a64("\x1e", h);
  }
  return to_hex(h);
}

struct BackendCompletion {
  std::string content;
  std::optional<int> tokens_out;  // backend-reported usage when available
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendCompletion complete(const std::vector<Message>& messages) = 0;
  virtual std::string kind() const = 0;
};

struct GenerationRecord {
  std::size_t prompt_chars = 0;
  std::string prompt_hash;  // hash of the full message list sent
  std::string completion;
  int tokens_out = 0;
  bool tokens_reported = false;  // false => whitespace-count fallback
  double latency_s = 0.0;
};

struct ChatSession {
  ChatSession() = default;
  explicit ChatSession(std::shared_ptr<Backend> b) : backend(std::move(b)) {}

  std::shared_ptr<Backend> backend;
  std::vector<Message> messages;
  std::vector<GenerationRecord> records;
};

inline std::pair<std::string, GenerationRecord> send(
    ChatSession& session, const std::string& user_message) {
  if (!session.backend) throw ConfigError("session has no backend bound");
  if (!session.messages.empty() &&
      session.messages.back().role == ChatRole::User)
    throw ConfigError("session roles must alternate user/assistant");
  session.messages.push_back({ChatRole::User, user_message});

  std::size_t prompt_chars = 0;
  for (const auto& m : session.messages) prompt_chars += m.content.size();
  std::string hash = prompt_hash(session.messages);

  auto start = std::chrono::steady_clock::now();
  BackendCompletion completion = session.backend->complete(session.messages);
  auto stop = std::chrono::steady_clock::now();

  session.messages.push_back({ChatRole::Assistant, completion.content});

  GenerationRecord record;
  record.prompt_chars = prompt_chars;
  record.prompt_hash = hash;
  record.completion = completion.content;
  record.tokens_reported = completion.tokens_out.has_value();
  record.tokens_out = completion.tokens_out
                          ? *completion.tokens_out
                          : whitespace_token_count(completion.content);
  record.latency_s =
      std::chrono::duration<double>(stop - start).count();
  session.records.push_back(record);
  return {completion.content, record};
}

// Always returns the same completion. Useful as the always-unparseable
// executor when probing the timeout rule.
class StaticBackend : public Backend {
 public:
  explicit StaticBackend(std::string content) : content_(std::move(content)) {}

  BackendCompletion complete(const std::vector<Message>&) override {
    return {content_, std::nullopt};
  }
  std::string kind() const override { return "static"; }

 private:
  std::string content_;
};

struct ReplayRecord {
  std::string prompt_hash;
  std::string completion;
  int tokens_out = 0;
  // Whether the original backend reported the count. Replaying a
  // whitespace-counted completion recomputes the same number, keeping the
  // counting-method flag stable across replays.
  bool tokens_reported = true;
};

// Serves recorded completions in order; verifies each incoming prompt
// against the recorded hash so silent drift fails loudly.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<ReplayRecord> records)
      : records_(std::move(records)) {}

  BackendCompletion complete(const std::vector<Message>& messages) override {
    if (cursor_ >= records_.size())
      throw ReplayExhausted("replay transcript exhausted after " +
                            std::to_string(records_.size()) + " completions");
    const ReplayRecord& rec = records_[cursor_];
    std::string h = prompt_hash(messages);
    if (h != rec.prompt_hash)
      throw ReplayMismatch("prompt diverges from recorded transcript at "
                           "completion " +
                           std::to_string(cursor_) + " (hash " + h +
                           " != " + rec.prompt_hash + ")");
    ++cursor_;
    if (!rec.tokens_reported) return {rec.completion, std::nullopt};
    return {rec.completion, rec.tokens_out};
  }
  std::string kind() const override { return "replay"; }

  std::size_t consumed() const { return cursor_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<ReplayRecord> records_;
  std::size_t cursor_ = 0;
};

struct HttpBackendConfig {
  std::string base_url = "http://localhost:8080";
  std::string path = "/v1/chat/completions";
  std::string model = "local-model";
  double temperature = 0.0;
  int timeout_s = 120;
  int max_retries = 2;
  int backoff_ms = 250;
};

}  // namespace planloop
