#include "sketchvlm/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "util.hpp"

namespace sketchvlm {

using nlohmann::json;

struct AnnotationService::Entry {
  std::mutex mutex;
  std::string id;
  std::string created_at;
  std::string question;
  std::string provider;
  json task;
  PromptConfig cfg;
  std::unique_ptr<Session> session;
  std::map<std::string, bool> hidden;
  std::uint64_t overlay_version = 0;
  std::filesystem::path dir;
};

namespace {

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw HttpError(400, "request body must be a JSON object");
  }
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError(400, std::string("malformed JSON: ") + e.what());
  }
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string new_session_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  return fmt::format("{:016x}", rng());
}

TaskPrompt task_from_json(const json& task) {
  const std::string kind = task.value("kind", "free");
  if (kind == "free") return FreeQuestion{task.value("question", "")};
  if (kind == "counting") return CountingTask{task.at("object").get<std::string>()};
  if (kind == "labeling")
    return LabelingTask{task.at("concept").get<std::string>(), task.at("parts").get<std::vector<std::string>>()};
  throw std::invalid_argument("unknown task kind: " + kind);
}

json turn_view(const TurnRecord& t) {
  return {{"index", t.index},
          {"delta", annotation_to_json(t.delta)},
          {"final_answer", t.final_answer ? json(*t.final_answer) : json(nullptr)},
          {"final_turn", t.final_turn},
          {"image_reset", t.image_reset},
          {"notes", t.notes},
          {"response", t.response}};
}

}  // namespace

AnnotationService::AnnotationService(ServiceOptions options, Gateway& gateway)
    : options_(std::move(options)), gateway_(gateway) {
  std::filesystem::create_directories(options_.data_dir);
  for (const auto& dirent : std::filesystem::directory_iterator(options_.data_dir)) {
    const auto log = dirent.path() / "events.ndjson";
    if (!dirent.is_directory() || !std::filesystem::exists(log)) continue;
    try {
      replay(log);
    } catch (const std::exception& e) {
      std::cerr << "skipping session log " << log << ": " << e.what() << "\n";
    }
  }
}

AnnotationService::~AnnotationService() { stop(); }

std::shared_ptr<AnnotationService::Entry> AnnotationService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t AnnotationService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::optional<json> AnnotationService::session_view(const std::string& id) const {
  auto e = find(id);
  if (!e) return std::nullopt;
  std::lock_guard lock(e->mutex);
  return view(*e);
}

json AnnotationService::view(const Entry& e) const {
  const auto& s = *e.session;
  json strokes = json::array();
  for (const auto& st : s.annotations().strokes) {
    strokes.push_back({{"id", st.id}, {"visible", !e.hidden.count(st.id)}, {"text", st.is_text()}});
  }
  json turns = json::array();
  for (const auto& t : s.turns()) turns.push_back(turn_view(t));
  return {{"id", e.id},
          {"status", to_string(s.status())},
          {"turn_count", s.turns().size()},
          {"overlay_version", e.overlay_version},
          {"created_at", e.created_at},
          {"question", e.question},
          {"provider", e.provider},
          {"config", prompt_config_to_json(e.cfg)},
          {"final_answer", s.final_answer() ? json(*s.final_answer()) : json(nullptr)},
          {"turn_limit_exceeded", s.turn_limit_exceeded()},
          {"width", s.base_image().width()},
          {"height", s.base_image().height()},
          {"strokes", strokes},
          {"turns", turns}};
}

OverlayDocument AnnotationService::visible_overlay(const Entry& e) const {
  auto doc = e.session->overlay();
  for (const auto& [sid, hidden] : e.hidden)
    if (hidden) doc.set_visible(sid, false);
  return doc;
}

void AnnotationService::log_event(Entry& e, const json& event) {
  append_line(e.dir / "events.ndjson", event.dump());
}

std::string AnnotationService::store_image(const std::string& id, const RasterImage& image) {
  const auto png = encode_png(image);
  const auto sha = sha256_hex(std::span<const std::uint8_t>(png));
  const auto dir = options_.data_dir / id / "images";
  std::filesystem::create_directories(dir);
  const auto path = dir / (sha + ".png");
  if (!std::filesystem::exists(path)) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
  }
  return sha;
}

void AnnotationService::replay(const std::filesystem::path& log) {
  std::ifstream in(log);
  std::string line;
  std::shared_ptr<Entry> e;
  std::string image_sha;
  std::vector<TurnRecord> turns;
  SessionStatus status = SessionStatus::Open;
  std::map<std::string, bool> hidden;
  std::uint64_t version = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json ev = json::parse(line);
    const std::string kind = ev.at("event").get<std::string>();
    if (kind == "created") {
      e = std::make_shared<Entry>();
      e->id = ev.at("id").get<std::string>();
      e->created_at = ev.at("created_at").get<std::string>();
      e->question = ev.at("question").get<std::string>();
      e->provider = ev.at("provider").get<std::string>();
      e->task = ev.at("task");
      e->cfg = prompt_config_from_json(ev.at("config"));
      e->dir = log.parent_path();
      image_sha = ev.at("image").get<std::string>();
    } else if (!e) {
      throw std::runtime_error("log does not start with a created event");
    } else if (kind == "turn") {
      auto t = TurnRecord::from_json(ev);
      if (t.image_reset) hidden.clear();
      if (t.image_reset || !t.delta.strokes.empty()) ++version;
      status = session_status_from_string(ev.at("status").get<std::string>());
      turns.push_back(std::move(t));
    } else if (kind == "image") {
      image_sha = ev.at("sha256").get<std::string>();
    } else if (kind == "visibility") {
      hidden[ev.at("stroke_id").get<std::string>()] = !ev.at("visible").get<bool>();
      ++version;
    }
  }
  if (!e) throw std::runtime_error("empty log");
  auto provider = options_.providers.find(e->provider);
  if (provider == options_.providers.end()) throw std::runtime_error("unknown provider " + e->provider);
  SessionOptions so = options_.session;
  so.event_log = log;
  e->session = std::make_unique<Session>(e->id, read_png(e->dir / "images" / (image_sha + ".png")), e->cfg,
                                         task_from_json(e->task), provider->second, gateway_, so);
  e->session->restore(std::move(turns), status);
  for (auto& [sid, h] : hidden)
    if (h) e->hidden[sid] = true;
  e->overlay_version = version;
  std::lock_guard lock(mutex_);
  sessions_[e->id] = e;
}

void AnnotationService::install_routes() {
  auto& srv = *server_;
  const std::size_t base64_cap = options_.max_upload_bytes / 3 * 4 + (1u << 16);
  srv.set_payload_max_length(base64_cap);
  srv.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  if (options_.static_dir) srv.set_mount_point("/", options_.static_dir->string());

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const HttpError& e) {
      send_error(res, e.status(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto decode_image = [this](const json& body) -> RasterImage {
    std::vector<std::uint8_t> bytes;
    if (body.contains("image_base64")) {
      try {
        bytes = base64_decode(body.at("image_base64").get<std::string>());
      } catch (const std::exception&) {
        throw HttpError(400, "image_base64 is not valid base64");
      }
    } else if (body.contains("image_url")) {
      if (!options_.allow_image_urls) throw HttpError(400, "image URLs are disabled");
      static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
      std::smatch m;
      const std::string u = body.at("image_url").get<std::string>();
      if (!std::regex_match(u, m, url)) throw HttpError(400, "image_url must be an http(s) URL");
      httplib::Client cli(m[1].str());
      cli.set_follow_location(true);
      cli.set_read_timeout(30);
      auto r = cli.Get(m[2].matched ? m[2].str() : "/");
      if (!r || r->status != 200) throw HttpError(400, "could not fetch image_url");
      bytes.assign(r->body.begin(), r->body.end());
    } else {
      throw HttpError(400, "image_base64 or image_url is required");
    }
    if (bytes.empty()) throw HttpError(400, "image is empty");
    if (bytes.size() > options_.max_upload_bytes) throw HttpError(413, "image exceeds the upload limit");
    try {
      return decode_png(bytes);
    } catch (const ImageDecodeError& e) {
      throw HttpError(400, std::string("image is not a readable PNG: ") + e.what());
    }
  };

  auto entry_or_404 = [this](const std::string& id) {
    auto e = find(id);
    if (!e) throw HttpError(404, "unknown session " + id);
    return e;
  };

  srv.Post("/sessions", [this, decode_image](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req, false);
    RasterImage image = decode_image(body);
    auto e = std::make_shared<Entry>();
    e->question = body.value("question", "");
    e->task = body.contains("task") ? body.at("task") : json{{"kind", "free"}, {"question", e->question}};
    try {
      e->cfg = prompt_config_from_json(body.value("config", json::object()));
      task_from_json(e->task);
    } catch (const std::exception& ex) {
      throw HttpError(400, ex.what());
    }
    e->provider = body.value("provider", "mock");
    auto provider = options_.providers.find(e->provider);
    if (provider == options_.providers.end()) throw HttpError(422, "unknown provider " + e->provider);

    e->id = new_session_id();
    e->created_at = now_utc();
    e->dir = options_.data_dir / e->id;
    std::filesystem::create_directories(e->dir);
    const auto sha = store_image(e->id, image);
    SessionOptions so = options_.session;
    so.event_log = e->dir / "events.ndjson";
    e->session = std::make_unique<Session>(e->id, std::move(image), e->cfg, task_from_json(e->task),
                                           provider->second, gateway_, so);
    log_event(*e, {{"event", "created"},
                   {"id", e->id},
                   {"created_at", e->created_at},
                   {"question", e->question},
                   {"task", e->task},
                   {"config", prompt_config_to_json(e->cfg)},
                   {"provider", e->provider},
                   {"image", sha}});
    {
      std::lock_guard lock(mutex_);
      sessions_[e->id] = e;
    }
    std::lock_guard lock(e->mutex);
    send_json(res, 201, view(*e));
  });

  srv.Get(R"(/sessions/([^/]+))", [entry_or_404, this](const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    std::lock_guard lock(e->mutex);
    send_json(res, 200, view(*e));
  });

  srv.Post(R"(/sessions/([^/]+)/turns)", [this, entry_or_404, decode_image](const httplib::Request& req,
                                                                             httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    const json body = parse_body(req, true);
    std::optional<std::string> text;
    if (body.contains("text") && !body.at("text").is_null()) text = body.at("text").get<std::string>();
    std::optional<RasterImage> image;
    if (body.contains("image_base64") || body.contains("image_url")) image = decode_image(body);

    std::lock_guard lock(e->mutex);
    const auto status = e->session->status();
    if (status == SessionStatus::Done || status == SessionStatus::Failed)
      throw HttpError(409, "session is " + to_string(status));
    std::string sha;
    if (image) sha = store_image(e->id, *image);
    try {
      e->session->step(text, std::move(image));
    } catch (const SessionError& err) {
      if (err.kind() == SessionErrorKind::Gateway) throw HttpError(502, err.what());
      if (err.kind() == SessionErrorKind::Precondition) throw HttpError(409, err.what());
      // Parse failures are recorded turns; fall through and report them.
    }
    const auto& turn = e->session->turns().back();
    if (turn.image_reset) {
      e->hidden.clear();
      log_event(*e, {{"event", "image"}, {"sha256", sha}});
    }
    if (turn.image_reset || !turn.delta.strokes.empty()) ++e->overlay_version;
    send_json(res, 200,
              {{"turn", turn_view(turn)},
               {"status", to_string(e->session->status())},
               {"overlay_version", e->overlay_version},
               {"final_answer", e->session->final_answer() ? json(*e->session->final_answer()) : json(nullptr)}});
  });

  srv.Get(R"(/sessions/([^/]+)/image)", [entry_or_404](const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    std::lock_guard lock(e->mutex);
    const auto png = encode_png(e->session->base_image());
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  });

  srv.Get(R"(/sessions/([^/]+)/overlay\.svg)", [this, entry_or_404](const httplib::Request& req,
                                                                     httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    std::lock_guard lock(e->mutex);
    res.set_content(to_svg(visible_overlay(*e)), "image/svg+xml");
  });

  srv.Patch(R"(/sessions/([^/]+)/strokes/([^/]+))", [this, entry_or_404](const httplib::Request& req,
                                                                         httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    const std::string sid = req.matches[2];
    const json body = parse_body(req, false);
    if (!body.contains("visible") || !body.at("visible").is_boolean())
      throw HttpError(400, "body needs a boolean 'visible'");
    const bool visible = body.at("visible").get<bool>();
    std::lock_guard lock(e->mutex);
    const auto& strokes = e->session->annotations().strokes;
    if (std::none_of(strokes.begin(), strokes.end(), [&](const Stroke& s) { return s.id == sid; }))
      throw HttpError(400, "unknown stroke id " + sid);
    if (visible) e->hidden.erase(sid);
    else e->hidden[sid] = true;
    ++e->overlay_version;
    log_event(*e, {{"event", "visibility"}, {"stroke_id", sid}, {"visible", visible}});
    send_json(res, 200, {{"stroke_id", sid}, {"visible", visible}, {"overlay_version", e->overlay_version}});
  });

  srv.Get(R"(/sessions/([^/]+)/export)", [this, entry_or_404](const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req.matches[1]);
    const std::string kind = req.has_param("kind") ? req.get_param_value("kind") : "svg";
    std::lock_guard lock(e->mutex);
    if (kind == "svg") {
      res.set_content(to_svg(visible_overlay(*e)), "image/svg+xml");
    } else if (kind == "png") {
      const auto png = encode_png(composite(e->session->base_image(), visible_overlay(*e)));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    } else if (kind == "anno.json") {
      AnnotationSet set = e->session->annotations();
      set.final_answer = e->session->final_answer();
      res.set_content(serialize_annotation(set, Dialect::Json), "application/json");
    } else {
      throw HttpError(400, "kind must be svg, png or anno.json");
    }
  });
}

int AnnotationService::start(const std::string& host, int port) {
  if (server_) throw std::logic_error("service already started");
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  return bound;
}

void AnnotationService::listen(const std::string& host, int port) {
  if (server_) throw std::logic_error("service already started");
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  if (!server_->listen(host, port)) throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
}

void AnnotationService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sketchvlm
