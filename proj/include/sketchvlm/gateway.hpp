#pragma once

// Provider-agnostic chat-completion client carrying text and images.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sketchvlm/raster.hpp"

namespace sketchvlm {

enum class Role { System, User, Assistant };

struct TextPart {
  std::string text;
};
struct ImagePart {
  std::shared_ptr<const RasterImage> image;
};
using MessagePart = std::variant<TextPart, ImagePart>;

struct ChatMessage {
  Role role = Role::User;
  std::vector<MessagePart> parts;

  static ChatMessage system(std::string text);
  static ChatMessage user(std::vector<MessagePart> parts);
  std::size_t image_count() const;
  /// Concatenated text parts.
  std::string text() const;
};

enum class GatewayErrorKind {
  Auth,
  Timeout,
  RateLimited,
  MalformedResponse,
  Transport,
  Server,
  ScriptExhausted,
  BadRequest,
};

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& message);
  GatewayErrorKind kind() const { return kind_; }
  bool retryable() const;

 private:
  GatewayErrorKind kind_;
};

std::string to_string(GatewayErrorKind kind);

/// One scripted reply: either text or a failure of the given kind.
struct MockResponse {
  std::string text;
  std::optional<GatewayErrorKind> failure;

  static MockResponse fail(GatewayErrorKind kind) { return {"", kind}; }
};

/// Scripted stand-in for a live provider. Replies in order and records every
/// request it receives. Thread-safe.
class MockBackend {
 public:
  explicit MockBackend(std::vector<MockResponse> script);

  MockResponse next(const std::vector<ChatMessage>& request);
  std::vector<std::vector<ChatMessage>> requests() const;
  std::size_t calls() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::vector<MockResponse> script_;
  std::size_t cursor_ = 0;
  std::vector<std::vector<ChatMessage>> requests_;
};

struct ProviderConfig {
  std::string name;
  std::string endpoint;  // full chat-completions URL
  std::string model_id;
  std::string credential_env;
  std::optional<double> temperature;  // unset: provider default
  double request_timeout_s = 120;
  int max_retries = 3;
  int retry_base_delay_ms = 500;
  std::shared_ptr<MockBackend> mock;  // set for scripted providers

  bool is_mock() const { return mock != nullptr; }
  /// Throws std::invalid_argument on a bad endpoint or negative retries.
  void check() const;
};

ProviderConfig mock_provider(std::vector<std::string> script, std::string name = "mock");
ProviderConfig mock_provider(std::vector<MockResponse> script, std::string name = "mock");

/// `SKETCH_<NAME>_API_KEY` with the name uppercased and non-alphanumerics
/// replaced by '_'.
std::string default_credential_env(const std::string& provider_name);

/// Reads `{"providers": [{name, endpoint, model, credential?, temperature?,
/// timeout?, max_retries?}]}`.
std::vector<ProviderConfig> load_provider_configs(const std::filesystem::path& path);

/// Chat-completions request body for `messages`. Images are sent inline as
/// base64 PNG data URLs.
nlohmann::json build_request_body(const std::vector<ChatMessage>& messages,
                                  const ProviderConfig& provider);

/// Extracts the assistant text from a chat-completions response body.
/// Throws GatewayError{MalformedResponse}.
std::string parse_response_body(const nlohmann::json& body);

struct AuditRecord {
  std::string request_id;
  std::string provider;
  std::string model;
  int attempt = 1;
  std::string request_sha256;
  double latency_ms = 0;
  std::string outcome;  // "ok" or an error kind
  std::string error;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;

  nlohmann::json to_json() const;
};

struct GatewayOptions {
  int max_in_flight = 8;
  std::optional<std::filesystem::path> audit_log;  // NDJSON, appended
};

/// Thread-safe; at most `max_in_flight` provider calls run at once.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});

  /// Returns the assistant text of one completion. Retryable failures
  /// (transport, timeout, 5xx, 429) back off exponentially up to
  /// provider.max_retries extra attempts. Every attempt is audited.
  std::string complete(const std::vector<ChatMessage>& messages, const ProviderConfig& provider);

  std::vector<AuditRecord> audit_records() const;

 private:
  struct Attempt {
    std::string text;
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
  };
  Attempt call_once(const std::vector<ChatMessage>& messages, const ProviderConfig& provider,
                    const std::string& body);
  void record(AuditRecord rec);

  GatewayOptions options_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;
  std::atomic<std::uint64_t> next_request_ = 1;
  mutable std::mutex audit_mutex_;
  std::vector<AuditRecord> audit_;
};

}  // namespace sketchvlm
