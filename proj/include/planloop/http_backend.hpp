#pragma once

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "planloop/gateway.hpp"

namespace planloop {

// Chat-completions client. Works against any server speaking the common
// {model, messages, temperature} request shape; completion token counts are
// taken from usage.completion_tokens when present.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

  BackendCompletion complete(const std::vector<Message>& messages) override {
    nlohmann::json request;
    request["model"] = config_.model;
    request["temperature"] = config_.temperature;
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages)
      msgs.push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    request["messages"] = msgs;
    std::string body = request.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(
            config_.backoff_ms * (1 << (attempt - 1))));
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_s, 0);
      client.set_read_timeout(config_.timeout_s, 0);
      auto res = client.Post(config_.path, body, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      try {
        nlohmann::json response = nlohmann::json::parse(res->body);
        BackendCompletion out;
        out.content = response.at("choices").at(0).at("message").at("content")
                          .get<std::string>();
        if (response.contains("usage") &&
            response["usage"].contains("completion_tokens"))
          out.tokens_out = response["usage"]["completion_tokens"].get<int>();
        return out;
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed response: ") + e.what();
      }
    }
    throw TransportError("chat completion failed after " +
                         std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
  }

  std::string kind() const override { return "http"; }

 private:
  HttpBackendConfig config_;
};

}  // namespace planloop
