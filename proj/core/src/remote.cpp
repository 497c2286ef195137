#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "tailprobe/remote.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "tailprobe/error.hpp"

namespace tailprobe {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + /v1/chat/completions
};

Endpoint split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "base URL needs a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint endpoint;
  endpoint.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  endpoint.path = prefix + "/v1/chat/completions";
  return endpoint;
}

bool is_timeout(httplib::Error error) {
  return error == httplib::Error::Read || error == httplib::Error::Write ||
         error == httplib::Error::ConnectionTimeout;
}

}  // namespace

nlohmann::json build_chat_request(const std::string& model, const std::string& prompt,
                                  const GenerationParams& params, int n) {
  nlohmann::json messages = nlohmann::json::array();
  if (params.system_prompt && !params.system_prompt->empty()) {
    messages.push_back({{"role", "system"}, {"content", *params.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", compose_prompt(params, prompt)}});
  return {
      {"model", model},
      {"messages", std::move(messages)},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
      {"n", n},
  };
}

std::vector<Continuation> parse_chat_response(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array()) {
    throw Error(ErrorCode::kMalformedResponse, "response has no choices array");
  }
  struct Choice {
    long long index;
    std::string content;
  };
  std::vector<Choice> choices;
  long long position = 0;
  for (const auto& choice : doc["choices"]) {
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
      throw Error(ErrorCode::kMalformedResponse, "choice without message");
    }
    const auto& message = choice["message"];
    if (!message.contains("content") || !message["content"].is_string()) {
      throw Error(ErrorCode::kMalformedResponse, "message without string content");
    }
    long long index = position++;
    if (choice.contains("index") && choice["index"].is_number_integer()) {
      index = choice["index"].get<long long>();
    }
    choices.push_back({index, message["content"].get<std::string>()});
  }
  std::stable_sort(choices.begin(), choices.end(),
                   [](const Choice& a, const Choice& b) { return a.index < b.index; });
  std::vector<Continuation> out;
  out.reserve(choices.size());
  for (auto& choice : choices) out.push_back(Continuation::from_text(std::move(choice.content)));
  return out;
}

RemoteBackend::RemoteBackend(BackendConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (cfg_.retries < 0) throw Error(ErrorCode::kInvalidArgument, "retry count must be >= 0");
  split_base_url(cfg_.base_url);
}

std::string RemoteBackend::api_key() const {
  const char* value = std::getenv(cfg_.api_key_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::kAuth, "environment variable " + cfg_.api_key_env + " is not set");
  }
  return value;
}

std::vector<Continuation> RemoteBackend::complete(const std::string& prompt,
                                                  const GenerationParams& params, int n) {
  params.validate();
  const std::string key = api_key();
  const Endpoint endpoint = split_base_url(cfg_.base_url);
  const std::string body = build_chat_request(cfg_.model, prompt, params, n).dump();
  const httplib::Headers headers = {{"Authorization", "Bearer " + key}};

  const int max_attempts = cfg_.retries + 1;
  for (int attempt = 1;; ++attempt) {
    httplib::Client client(endpoint.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto response = client.Post(endpoint.path, headers, body, "application/json");
    if (!response) {
      const httplib::Error error = response.error();
      if (is_timeout(error)) {
        throw RemoteError(ErrorCode::kTimeout, attempt, 0, "request timed out");
      }
      throw RemoteError(ErrorCode::kTransport, attempt, 0, httplib::to_string(error));
    }

    const int status = response->status;
    if (status == 200) {
      auto continuations = parse_chat_response(response->body);
      if (continuations.size() != static_cast<std::size_t>(n)) {
        throw Error(ErrorCode::kMalformedResponse, "expected " + std::to_string(n) + " choices, got " +
                                                       std::to_string(continuations.size()));
      }
      return continuations;
    }
    if (status == 401 || status == 403) {
      throw RemoteError(ErrorCode::kAuth, attempt, status, "HTTP " + std::to_string(status));
    }
    const bool retryable = status == 429 || (status >= 500 && status < 600);
    if (!retryable) {
      throw RemoteError(ErrorCode::kServer, attempt, status,
                        "unexpected HTTP " + std::to_string(status));
    }
    if (attempt >= max_attempts) {
      throw RemoteError(status == 429 ? ErrorCode::kRateLimited : ErrorCode::kServer, attempt, status,
                        "HTTP " + std::to_string(status));
    }
    sleeper_(cfg_.backoff_base * (1LL << std::min(attempt - 1, 20)));
  }
}

Generation RemoteBackend::generate(const std::string& prompt, const GenerationParams& params,
                                   std::span<const std::size_t> sample_indices) {
  Generation generation;
  if (sample_indices.empty()) return generation;
  if (cfg_.supports_n) {
    generation.continuations = complete(prompt, params, static_cast<int>(sample_indices.size()));
    return generation;
  }
  for (std::size_t i = 0; i < sample_indices.size(); ++i) {
    auto batch = complete(prompt, params, 1);
    generation.continuations.push_back(std::move(batch.front()));
  }
  return generation;
}

}  // namespace tailprobe
