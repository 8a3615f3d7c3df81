// Chat-completion client with a content-addressed response cache.
//
// Every completion is keyed by SHA-256 over the canonical JSON of
// (model_id, template_id, system, user, temperature, max_tokens) and stored as
// <cache_dir>/<key>.json. In cache-only mode a miss is an error and the
// network is never touched.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>

#include "fiova/prompts.h"
#include "json.hpp"

namespace fiova::llm {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FixtureMissingError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class HttpStatusError : public GatewayError {
 public:
  HttpStatusError(int status, const std::string& body);
  int status() const { return status_; }

 private:
  int status_;
};

class NetworkError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

inline constexpr const char* kApiKeyEnv = "FIOVA_API_KEY";

struct Decoding {
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct CompletionRecord {
  std::string cache_key;
  std::string model_id;
  std::string template_id;
  std::string raw_text;
  std::string timestamp;
};

std::string cache_key(const RenderedPrompt& prompt, const Decoding& decoding);
std::string sha256_hex(std::string_view data);

// Raw transport: returns the HTTP status and body for one request.
struct HttpResult {
  int status = 0;  // 0 when no response was received
  std::string body;
  std::string error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResult post_chat(const std::string& body) = 0;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{60000};
};

class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(EndpointConfig config);
  HttpResult post_chat(const std::string& body) override;

 private:
  EndpointConfig config_;
  std::string origin_;
  std::string path_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{20000};
  double jitter = 0.25;  // delay is scaled by 1 +/- jitter
};

struct GatewayConfig {
  std::filesystem::path cache_dir;
  bool cache_only = false;
  RetryPolicy retry;
  int max_in_flight = 4;
  double requests_per_second = 8.0;  // <= 0 disables the rate limiter
  double burst = 8.0;
};

struct GatewayStats {
  std::size_t network_requests = 0;  // HTTP attempts, retries included
  std::size_t cache_hits = 0;
  std::size_t completions = 0;  // successful network completions
};

class TokenBucket {
 public:
  TokenBucket(double rate, double burst);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

class Gateway {
 public:
  // `transport` may be null in cache-only mode.
  Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport);

  std::string complete(const RenderedPrompt& prompt, const Decoding& decoding);

  std::optional<CompletionRecord> lookup(const std::string& key) const;
  void store(const RenderedPrompt& prompt, const Decoding& decoding,
             const std::string& raw_text);

  GatewayStats stats() const;
  const GatewayConfig& config() const { return config_; }

 private:
  std::string fetch(const RenderedPrompt& prompt, const Decoding& decoding);
  std::filesystem::path path_for(const std::string& key) const;

  GatewayConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::counting_semaphore<1024> slots_;
  TokenBucket bucket_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::string>> in_flight_;

  std::atomic<std::size_t> network_requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> completions_{0};
};

nlohmann::json chat_request_body(const RenderedPrompt& prompt,
                                 const Decoding& decoding);
// choices[0].message.content, or GatewayError.
std::string chat_response_content(const std::string& body);

}  // namespace fiova::llm
