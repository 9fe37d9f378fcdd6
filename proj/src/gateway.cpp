#include "sketchvlm/gateway.hpp"

#include <chrono>
#include <cctype>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "util.hpp"

namespace sketchvlm {

ChatMessage ChatMessage::system(std::string text) {
  return {Role::System, {TextPart{std::move(text)}}};
}

ChatMessage ChatMessage::user(std::vector<MessagePart> parts) {
  return {Role::User, std::move(parts)};
}

std::size_t ChatMessage::image_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += std::holds_alternative<ImagePart>(p) ? 1 : 0;
  return n;
}

std::string ChatMessage::text() const {
  std::string out;
  for (const auto& p : parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      if (!out.empty()) out += "\n\n";
      out += t->text;
    }
  }
  return out;
}

GatewayError::GatewayError(GatewayErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)), kind_(kind) {}

bool GatewayError::retryable() const {
  switch (kind_) {
    case GatewayErrorKind::Timeout:
    case GatewayErrorKind::RateLimited:
    case GatewayErrorKind::Transport:
    case GatewayErrorKind::Server:
      return true;
    default:
      return false;
  }
}

std::string to_string(GatewayErrorKind kind) {
  switch (kind) {
    case GatewayErrorKind::Auth: return "AuthError";
    case GatewayErrorKind::Timeout: return "Timeout";
    case GatewayErrorKind::RateLimited: return "RateLimited";
    case GatewayErrorKind::MalformedResponse: return "MalformedResponse";
    case GatewayErrorKind::Transport: return "TransportError";
    case GatewayErrorKind::Server: return "ServerError";
    case GatewayErrorKind::ScriptExhausted: return "ScriptExhausted";
    case GatewayErrorKind::BadRequest: return "BadRequest";
  }
  return "GatewayError";
}

MockBackend::MockBackend(std::vector<MockResponse> script) : script_(std::move(script)) {}

MockResponse MockBackend::next(const std::vector<ChatMessage>& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (cursor_ >= script_.size()) {
    throw GatewayError(GatewayErrorKind::ScriptExhausted,
                       fmt::format("mock script of {} responses is exhausted", script_.size()));
  }
  return script_[cursor_++];
}

std::vector<std::vector<ChatMessage>> MockBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::size_t MockBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return script_.size() - cursor_;
}

void ProviderConfig::check() const {
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (is_mock()) return;
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw std::invalid_argument(fmt::format("provider '{}': endpoint '{}' is not an http(s) URL",
                                            name, endpoint));
  }
  if (model_id.empty()) throw std::invalid_argument(fmt::format("provider '{}' has no model", name));
}

ProviderConfig mock_provider(std::vector<std::string> script, std::string name) {
  std::vector<MockResponse> responses;
  responses.reserve(script.size());
  for (auto& s : script) responses.push_back({std::move(s), std::nullopt});
  return mock_provider(std::move(responses), std::move(name));
}

ProviderConfig mock_provider(std::vector<MockResponse> script, std::string name) {
  ProviderConfig cfg;
  cfg.name = std::move(name);
  cfg.model_id = "scripted";
  cfg.max_retries = 0;
  cfg.retry_base_delay_ms = 0;
  cfg.mock = std::make_shared<MockBackend>(std::move(script));
  return cfg;
}

std::string default_credential_env(const std::string& provider_name) {
  std::string env = "SKETCH_";
  for (char c : provider_name) {
    env += std::isalnum(static_cast<unsigned char>(c))
               ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
               : '_';
  }
  return env + "_API_KEY";
}

std::vector<ProviderConfig> load_provider_configs(const std::filesystem::path& path) {
  const auto doc = nlohmann::json::parse(read_text_file(path));
  std::vector<ProviderConfig> out;
  for (const auto& p : doc.at("providers")) {
    ProviderConfig cfg;
    cfg.name = p.at("name").get<std::string>();
    cfg.endpoint = p.at("endpoint").get<std::string>();
    cfg.model_id = p.at("model").get<std::string>();
    cfg.credential_env = p.value("credential", default_credential_env(cfg.name));
    if (p.contains("temperature") && !p["temperature"].is_null()) {
      cfg.temperature = p["temperature"].get<double>();
    }
    cfg.request_timeout_s = p.value("timeout", cfg.request_timeout_s);
    cfg.max_retries = p.value("max_retries", cfg.max_retries);
    cfg.retry_base_delay_ms = p.value("retry_base_delay_ms", cfg.retry_base_delay_ms);
    cfg.check();
    out.push_back(std::move(cfg));
  }
  return out;
}

nlohmann::json build_request_body(const std::vector<ChatMessage>& messages,
                                  const ProviderConfig& provider) {
  nlohmann::json body;
  body["model"] = provider.model_id;
  body["messages"] = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    nlohmann::json msg;
    msg["role"] = m.role == Role::System ? "system" : m.role == Role::User ? "user" : "assistant";
    if (m.role == Role::System) {
      if (m.image_count() > 0) {
        throw GatewayError(GatewayErrorKind::BadRequest, "system messages carry text only");
      }
      msg["content"] = m.text();
    } else {
      msg["content"] = nlohmann::json::array();
      for (const MessagePart& part : m.parts) {
        if (const auto* t = std::get_if<TextPart>(&part)) {
          msg["content"].push_back({{"type", "text"}, {"text", t->text}});
        } else {
          const auto& img = std::get<ImagePart>(part);
          const auto png = encode_png(*img.image);
          msg["content"].push_back(
              {{"type", "image_url"},
               {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
        }
      }
    }
    body["messages"].push_back(std::move(msg));
  }
  if (provider.temperature) body["temperature"] = *provider.temperature;
  return body;
}

std::string parse_response_body(const nlohmann::json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string text;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
      }
      return text;
    }
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(GatewayErrorKind::MalformedResponse, e.what());
  }
  throw GatewayError(GatewayErrorKind::MalformedResponse, "message content is neither text nor parts");
}

nlohmann::json AuditRecord::to_json() const {
  nlohmann::json j = {{"request_id", request_id},
                      {"provider", provider},
                      {"model", model},
                      {"attempt", attempt},
                      {"request_sha256", request_sha256},
                      {"latency_ms", latency_ms},
                      {"outcome", outcome}};
  if (!error.empty()) j["error"] = error;
  if (prompt_tokens) j["prompt_tokens"] = *prompt_tokens;
  if (completion_tokens) j["completion_tokens"] = *completion_tokens;
  return j;
}

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
  if (options_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
}

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  const std::size_t path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

Gateway::Attempt Gateway::call_once(const std::vector<ChatMessage>& messages,
                                    const ProviderConfig& provider, const std::string& body) {
  if (provider.is_mock()) {
    MockResponse r = provider.mock->next(messages);
    if (r.failure) throw GatewayError(*r.failure, "scripted failure");
    return {std::move(r.text), std::nullopt, std::nullopt};
  }

  const char* key = std::getenv(provider.credential_env.c_str());
  const UrlParts url = split_url(provider.endpoint);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(provider.request_timeout_s);
  const auto usecs = static_cast<time_t>((provider.request_timeout_s - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", std::string("Bearer ") + key);
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout) {
      throw GatewayError(GatewayErrorKind::Timeout, httplib::to_string(err));
    }
    if (err == httplib::Error::Read) {
      throw GatewayError(GatewayErrorKind::Timeout, "no response before the read timeout");
    }
    throw GatewayError(GatewayErrorKind::Transport, httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw GatewayError(GatewayErrorKind::Auth, fmt::format("HTTP {}", res->status));
  }
  if (res->status == 429) throw GatewayError(GatewayErrorKind::RateLimited, "HTTP 429");
  if (res->status >= 500) {
    throw GatewayError(GatewayErrorKind::Server, fmt::format("HTTP {}", res->status));
  }
  if (res->status != 200) {
    throw GatewayError(GatewayErrorKind::BadRequest,
                       fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(GatewayErrorKind::MalformedResponse, e.what());
  }
  Attempt out{parse_response_body(doc), std::nullopt, std::nullopt};
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& usage = doc["usage"];
    if (usage.contains("prompt_tokens")) out.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
    if (usage.contains("completion_tokens")) {
      out.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
    }
  }
  return out;
}

std::string Gateway::complete(const std::vector<ChatMessage>& messages,
                              const ProviderConfig& provider) {
  provider.check();
  if (!provider.is_mock() && std::getenv(provider.credential_env.c_str()) == nullptr) {
    throw GatewayError(GatewayErrorKind::Auth,
                       fmt::format("credential variable {} is not set", provider.credential_env));
  }
  const std::string body = build_request_body(messages, provider).dump();
  const std::string request_hash = sha256_hex(body);
  const std::string request_id = fmt::format("req-{:06d}", next_request_.fetch_add(1));

  {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
  }
  struct SlotRelease {
    Gateway* g;
    ~SlotRelease() {
      {
        std::lock_guard lock(g->slots_mutex_);
        --g->in_flight_;
      }
      g->slots_cv_.notify_one();
    }
  } release{this};

  for (int attempt = 1;; ++attempt) {
    AuditRecord rec;
    rec.request_id = request_id;
    rec.provider = provider.name;
    rec.model = provider.model_id;
    rec.attempt = attempt;
    rec.request_sha256 = request_hash;
    const auto start = std::chrono::steady_clock::now();
    try {
      Attempt result = call_once(messages, provider, body);
      rec.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.outcome = "ok";
      rec.prompt_tokens = result.prompt_tokens;
      rec.completion_tokens = result.completion_tokens;
      record(std::move(rec));
      return std::move(result.text);
    } catch (const GatewayError& e) {
      rec.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.outcome = to_string(e.kind());
      rec.error = e.what();
      record(std::move(rec));
      if (!e.retryable() || attempt > provider.max_retries) throw;
      const int delay = provider.retry_base_delay_ms * (1 << std::min(attempt - 1, 6));
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(delay, 30000)));
    }
  }
}

void Gateway::record(AuditRecord rec) {
  std::lock_guard lock(audit_mutex_);
  if (options_.audit_log) append_line(*options_.audit_log, rec.to_json().dump());
  audit_.push_back(std::move(rec));
}

std::vector<AuditRecord> Gateway::audit_records() const {
  std::lock_guard lock(audit_mutex_);
  return audit_;
}

}  // namespace sketchvlm
