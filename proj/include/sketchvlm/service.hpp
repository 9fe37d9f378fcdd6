#pragma once

// JSON-over-HTTP front end for interactive annotation sessions.
//
//   POST  /sessions                       create (no model call)
//   GET   /sessions/{id}                  resource view with turns
//   POST  /sessions/{id}/turns            run one protocol turn
//   GET   /sessions/{id}/image            the unmodified source PNG
//   GET   /sessions/{id}/overlay.svg      current overlay
//   PATCH /sessions/{id}/strokes/{sid}    {"visible": bool}
//   GET   /sessions/{id}/export?kind=svg|png|anno.json

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "sketchvlm/gateway.hpp"
#include "sketchvlm/session.hpp"

namespace httplib {
class Server;
}

namespace sketchvlm {

struct ServiceOptions {
  std::filesystem::path data_dir = "studio-data";
  std::map<std::string, ProviderConfig> providers;
  std::optional<std::filesystem::path> static_dir;
  std::string cors_origin = "*";
  std::size_t max_upload_bytes = 20u << 20;
  SessionOptions session;
  bool allow_image_urls = true;
};

class AnnotationService {
 public:
  /// Replays every session log found under data_dir.
  AnnotationService(ServiceOptions options, Gateway& gateway);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  /// Same JSON as GET /sessions/{id}; nullopt for unknown ids.
  std::optional<nlohmann::json> session_view(const std::string& id) const;
  std::size_t session_count() const;

 private:
  struct Entry;

  void install_routes();
  void replay(const std::filesystem::path& log);
  std::shared_ptr<Entry> find(const std::string& id) const;
  nlohmann::json view(const Entry& e) const;
  OverlayDocument visible_overlay(const Entry& e) const;
  void log_event(Entry& e, const nlohmann::json& event);
  std::string store_image(const std::string& id, const RasterImage& image);

  ServiceOptions options_;
  Gateway& gateway_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace sketchvlm
