#include <gtest/gtest.h>

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "tailprobe/error.hpp"
#include "tailprobe/remote.hpp"

namespace tailprobe {
namespace {

constexpr const char* kKeyEnv = "TAILPROBE_TEST_API_KEY";

std::string choices_body(int n, const std::string& stem = "reply") {
  nlohmann::json choices = nlohmann::json::array();
  // Reverse order on the wire; the client sorts by index.
  for (int i = n - 1; i >= 0; --i) {
    choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", stem + std::to_string(i)}}}});
  }
  return nlohmann::json{{"choices", choices}}.dump();
}

// Local chat-completions endpoint replying with a scripted status sequence.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      requests.push_back(nlohmann::json::parse(req.body));
      authorization.push_back(req.get_header_value("Authorization"));
      const int status = statuses.empty() ? 200 : statuses.front();
      if (!statuses.empty()) statuses.erase(statuses.begin());
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      res.status = status;
      if (status == 200) {
        res.set_content(body_override.empty() ? choices_body(requests.back()["n"].get<int>()) : body_override,
                        "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<nlohmann::json> requests;
  std::vector<std::string> authorization;
  std::vector<int> statuses;
  std::string body_override;
  std::chrono::milliseconds delay{0};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
};

class RemoteTest : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv(kKeyEnv, "sk-test", 1); }
  void TearDown() override { ::unsetenv(kKeyEnv); }

  RemoteBackend backend(bool supports_n = true, int retries = 3) {
    BackendConfig cfg;
    cfg.kind = BackendKind::kRemote;
    cfg.base_url = server.url();
    cfg.model = "test-model";
    cfg.api_key_env = kKeyEnv;
    cfg.retries = retries;
    cfg.backoff_base = std::chrono::milliseconds(100);
    cfg.timeout = std::chrono::milliseconds(300);
    cfg.supports_n = supports_n;
    return RemoteBackend(cfg, [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }

  GenerationParams params() const {
    GenerationParams p;
    p.max_tokens = 50;
    return p;
  }

  FakeServer server;
  std::vector<std::chrono::milliseconds> sleeps;
};

std::vector<std::size_t> indices(std::size_t n) { return sample_range(n); }

int error_code_attempts(const std::function<void()>& f, ErrorCode expected) {
  try {
    f();
  } catch (const RemoteError& e) {
    EXPECT_EQ(e.code(), expected);
    return e.attempts();
  }
  ADD_FAILURE() << "no RemoteError";
  return -1;
}

TEST(ChatRequest, MatchesGoldenBody) {
  std::ifstream in(std::string(TAILPROBE_TEST_DATA) + "/golden_request.json");
  ASSERT_TRUE(in);
  const nlohmann::json golden = nlohmann::json::parse(in);
  GenerationParams p;
  p.temperature = 0.7;
  p.max_tokens = 300;
  p.system_prompt = "Answer briefly.";
  p.question_prompt = "Why is the sky blue?";
  EXPECT_EQ(build_chat_request("gpt-3.5-turbo", "the sky is blue because", p, 10), golden);
}

TEST(ChatRequest, NeverAsksForLogprobs) {
  GenerationParams p;
  p.want_logprobs = true;
  const auto body = build_chat_request("m", "x", p, 1);
  EXPECT_FALSE(body.contains("logprobs"));
  EXPECT_EQ(body["messages"].size(), 1u);
}

TEST(ChatResponse, OrdersByIndexAndValidates) {
  const auto continuations = parse_chat_response(choices_body(3));
  ASSERT_EQ(continuations.size(), 3u);
  EXPECT_EQ(continuations[0].text, "reply0");
  EXPECT_EQ(continuations[2].tokens, TokenSequence{"reply2"});
  for (const char* bad : {"not json", "{}", "{\"choices\":[{}]}", "{\"choices\":[{\"message\":{\"content\":3}}]}"}) {
    try {
      parse_chat_response(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedResponse) << bad;
    }
  }
}

TEST_F(RemoteTest, SingleRequestForKSamples) {
  auto b = backend();
  const Generation g = b.generate("prompt", params(), indices(4));
  ASSERT_EQ(g.continuations.size(), 4u);
  EXPECT_EQ(g.continuations[3].text, "reply3");
  ASSERT_EQ(server.requests.size(), 1u);
  EXPECT_EQ(server.requests[0]["n"], 4);
  EXPECT_EQ(server.requests[0]["model"], "test-model");
  EXPECT_EQ(server.authorization[0], "Bearer sk-test");
}

TEST_F(RemoteTest, FallsBackToOneRequestPerSample) {
  auto b = backend(false);
  const Generation g = b.generate("prompt", params(), indices(3));
  EXPECT_EQ(g.continuations.size(), 3u);
  ASSERT_EQ(server.requests.size(), 3u);
  for (const auto& r : server.requests) EXPECT_EQ(r["n"], 1);
}

TEST_F(RemoteTest, RetriesServerErrorsWithExponentialBackoff) {
  server.statuses = {503, 429, 200};
  auto b = backend();
  EXPECT_EQ(b.generate("p", params(), indices(2)).continuations.size(), 2u);
  EXPECT_EQ(server.requests.size(), 3u);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                             std::chrono::milliseconds(200)}));
}

TEST_F(RemoteTest, GivesUpAfterRetryBudget) {
  server.statuses = {429, 429, 429};
  auto b = backend(true, 2);
  EXPECT_EQ(error_code_attempts([&] { b.generate("p", params(), indices(1)); }, ErrorCode::kRateLimited), 3);
  EXPECT_EQ(sleeps.size(), 2u);
}

TEST_F(RemoteTest, AuthFailuresAreNotRetried) {
  server.statuses = {401};
  auto b = backend();
  EXPECT_EQ(error_code_attempts([&] { b.generate("p", params(), indices(1)); }, ErrorCode::kAuth), 1);
  EXPECT_TRUE(sleeps.empty());
}

TEST_F(RemoteTest, MissingKeyFailsBeforeAnyRequest) {
  ::unsetenv(kKeyEnv);
  auto b = backend();
  try {
    b.generate("p", params(), indices(1));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuth);
    EXPECT_NE(std::string(e.what()).find(kKeyEnv), std::string::npos);
  }
  EXPECT_TRUE(server.requests.empty());
}

TEST_F(RemoteTest, WrongChoiceCountIsMalformed) {
  server.body_override = choices_body(1);
  auto b = backend();
  try {
    b.generate("p", params(), indices(3));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedResponse);
  }
}

TEST_F(RemoteTest, SlowServerTimesOut) {
  server.delay = std::chrono::milliseconds(1500);
  auto b = backend();
  error_code_attempts([&] { b.generate("p", params(), indices(1)); }, ErrorCode::kTimeout);
}

TEST(RemoteBackendConfig, UnreachableHostIsTransportError) {
  ::setenv(kKeyEnv, "sk-test", 1);
  BackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.api_key_env = kKeyEnv;
  cfg.timeout = std::chrono::milliseconds(500);
  RemoteBackend b(cfg, [](std::chrono::milliseconds) {});
  const std::vector<std::size_t> one = {0};
  try {
    b.generate("p", GenerationParams{}, one);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kTransport || e.code() == ErrorCode::kTimeout);
    EXPECT_TRUE(e.is_backend_error());
  }
  ::unsetenv(kKeyEnv);
  EXPECT_THROW(RemoteBackend(BackendConfig{.base_url = "no-scheme"}), Error);
}

}  // namespace
}  // namespace tailprobe
