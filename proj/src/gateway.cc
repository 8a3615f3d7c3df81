#include "fiova/gateway.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <random>
#include <thread>

#include "fiova/file_io.h"
#include "httplib.h"

namespace fiova::llm {
namespace {

using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable(const HttpResult& r) {
  return r.status == 0 || r.status == 429 || (r.status >= 500 && r.status < 600);
}

std::chrono::milliseconds backoff(const RetryPolicy& policy, int attempt) {
  thread_local std::mt19937 rng(std::random_device{}());
  const double base = static_cast<double>(policy.base_delay.count()) *
                      std::pow(2.0, attempt - 1);
  const double capped = std::min(base, static_cast<double>(policy.max_delay.count()));
  std::uniform_real_distribution<double> u(-policy.jitter, policy.jitter);
  return std::chrono::milliseconds(
      static_cast<long long>(std::max(0.0, capped * (1.0 + u(rng)))));
}

}  // namespace

HttpStatusError::HttpStatusError(int status, const std::string& body)
    : GatewayError("HTTP " + std::to_string(status) + ": " + body.substr(0, 200)),
      status_(status) {}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw GatewayError("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string cache_key(const RenderedPrompt& prompt, const Decoding& decoding) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  const json doc = {{"model_id", decoding.model_id},
                    {"template_id", to_string(prompt.template_id)},
                    {"system", prompt.system},
                    {"user", prompt.user},
                    {"temperature", decoding.temperature},
                    {"max_tokens", decoding.max_tokens}};
  return sha256_hex(doc.dump());
}

json chat_request_body(const RenderedPrompt& prompt, const Decoding& decoding) {
  return {{"model", decoding.model_id},
          {"temperature", decoding.temperature},
          {"max_tokens", decoding.max_tokens},
          {"messages",
           json::array({{{"role", "system"}, {"content", prompt.system}},
                        {{"role", "user"}, {"content", prompt.user}}})}};
}

std::string chat_response_content(const std::string& body) {
  try {
    const json doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw GatewayError(std::string("malformed chat response: ") + e.what());
  }
}

HttpChatTransport::HttpChatTransport(EndpointConfig config)
    : config_(std::move(config)) {
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw GatewayError("endpoint must be an http(s) URL: " + config_.base_url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  if (!path_.ends_with("/chat/completions")) path_ += "/chat/completions";
}

HttpResult HttpChatTransport::post_chat(const std::string& body) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  client.set_write_timeout(secs.count(), 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

TokenBucket::TokenBucket(double rate, double burst)
    : rate_(rate),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

Gateway::Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      slots_(std::clamp(config_.max_in_flight, 1, 1024)),
      bucket_(config_.requests_per_second, config_.burst) {
  if (config_.cache_dir.empty()) throw GatewayError("cache directory not set");
  if (!config_.cache_only && !transport_) {
    throw GatewayError("no endpoint configured and cache-only mode is off");
  }
}

std::filesystem::path Gateway::path_for(const std::string& key) const {
  return config_.cache_dir / (key + ".json");
}

std::optional<CompletionRecord> Gateway::lookup(const std::string& key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const json doc = json::parse(io::read_file(path));
    return CompletionRecord{doc.at("cache_key").get<std::string>(),
                            doc.at("model_id").get<std::string>(),
                            doc.at("template_id").get<std::string>(),
                            doc.at("raw_text").get<std::string>(),
                            doc.value("timestamp", "")};
  } catch (const std::exception& e) {
    throw GatewayError("corrupt cache entry " + path.string() + ": " + e.what());
  }
}

void Gateway::store(const RenderedPrompt& prompt, const Decoding& decoding,
                    const std::string& raw_text) {
  const auto key = cache_key(prompt, decoding);
  const json doc = {{"cache_key", key},
                    {"model_id", decoding.model_id},
                    {"template_id", to_string(prompt.template_id)},
                    {"temperature", decoding.temperature},
                    {"max_tokens", decoding.max_tokens},
                    {"system", prompt.system},
                    {"user", prompt.user},
                    {"raw_text", raw_text},
                    {"timestamp", utc_now()}};
  io::write_file_atomic(path_for(key), doc.dump(2) + "\n");
}

std::string Gateway::complete(const RenderedPrompt& prompt, const Decoding& decoding) {
  if (decoding.model_id.empty()) throw GatewayError("model_id is required");
  const auto key = cache_key(prompt, decoding);
  if (auto hit = lookup(key)) {
    ++cache_hits_;
    return hit->raw_text;
  }
  if (config_.cache_only) {
    throw FixtureMissingError("fixture missing: no cached completion for " +
                              std::string(to_string(prompt.template_id)) +
                              " (key " + key + ")");
  }

  // Identical concurrent requests wait on the first one.
  std::promise<std::string> promise;
  std::shared_future<std::string> pending;
  {
    std::lock_guard lock(mu_);
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      pending = it->second;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  try {
    std::string text = fetch(prompt, decoding);
    store(prompt, decoding, text);
    promise.set_value(text);
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
    return text;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
    throw;
  }
}

std::string Gateway::fetch(const RenderedPrompt& prompt, const Decoding& decoding) {
  const std::string body = chat_request_body(prompt, decoding).dump();
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  HttpResult last;
  const int attempts = std::max(1, config_.retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    bucket_.acquire();
    ++network_requests_;
    last = transport_->post_chat(body);
    if (last.status >= 200 && last.status < 300) {
      ++completions_;
      return chat_response_content(last.body);
    }
    if (!retryable(last)) throw HttpStatusError(last.status, last.body);
    if (attempt < attempts) std::this_thread::sleep_for(backoff(config_.retry, attempt));
  }
  if (last.status == 0) {
    throw NetworkError("request failed after " + std::to_string(attempts) +
                       " attempts: " + last.error);
  }
  throw HttpStatusError(last.status, last.body);
}

GatewayStats Gateway::stats() const {
  return {network_requests_.load(), cache_hits_.load(), completions_.load()};
}

}  // namespace fiova::llm
