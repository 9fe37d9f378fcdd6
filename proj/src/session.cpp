#include "sketchvlm/session.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "util.hpp"

namespace sketchvlm {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Open: return "open";
    case SessionStatus::AwaitingFinal: return "awaiting_final";
    case SessionStatus::Done: return "done";
    case SessionStatus::Failed: return "failed";
  }
  return "unknown";
}

SessionStatus session_status_from_string(const std::string& name) {
  for (auto s : {SessionStatus::Open, SessionStatus::AwaitingFinal, SessionStatus::Done, SessionStatus::Failed})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown session status: " + name);
}

SessionError::SessionError(SessionErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

std::optional<std::string> extract_final_answer(std::string_view text) {
  std::string low = lower(text);
  auto open = low.find("<final_answer>");
  if (open == std::string::npos) return std::nullopt;
  auto begin = open + std::string_view("<final_answer>").size();
  auto close = low.find("</final_answer>", begin);
  auto end = close == std::string::npos ? text.size() : close;
  return trim(text.substr(begin, end - begin));
}

nlohmann::json TurnRecord::to_json() const {
  nlohmann::json j;
  j["index"] = index;
  j["sent_image_sha256"] = sent_image_sha256;
  j["sent_text_history"] = sent_text_history;
  j["user_text"] = user_text ? nlohmann::json(*user_text) : nlohmann::json(nullptr);
  j["image_reset"] = image_reset;
  j["final_turn"] = final_turn;
  j["response"] = response;
  j["delta"] = annotation_to_json(delta);
  j["final_answer"] = final_answer ? nlohmann::json(*final_answer) : nlohmann::json(nullptr);
  j["notes"] = notes;
  return j;
}

TurnRecord TurnRecord::from_json(const nlohmann::json& j) {
  TurnRecord r;
  r.index = j.at("index").get<int>();
  r.sent_image_sha256 = j.at("sent_image_sha256").get<std::string>();
  r.sent_text_history = j.at("sent_text_history").get<std::string>();
  r.user_text = opt_string(j, "user_text");
  r.image_reset = j.value("image_reset", false);
  r.final_turn = j.value("final_turn", false);
  r.response = j.at("response").get<std::string>();
  r.delta = annotation_from_json(j.at("delta"));
  r.final_answer = opt_string(j, "final_answer");
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

Session::Session(std::string id, RasterImage base_image, PromptConfig cfg, TaskPrompt task,
                 ProviderConfig provider, Gateway& gateway, SessionOptions options)
    : id_(std::move(id)),
      base_(std::make_shared<const RasterImage>(std::move(base_image))),
      cfg_(std::move(cfg)),
      task_(std::move(task)),
      provider_(std::move(provider)),
      gateway_(gateway),
      options_(std::move(options)) {
  cfg_.check();
  if (options_.max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  options_.overlay.strict = false;
}

OverlayDocument Session::overlay() const {
  return render_overlay(accumulated_, cfg_.frame, base_->width(), base_->height(),
                        options_.overlay);
}

RasterImage Session::feedback_image() const {
  RasterImage img = accumulated_.strokes.empty() ? *base_ : composite(*base_, overlay());
  if (cfg_.grid_enabled) return grid_augment(img, cfg_.frame, options_.grid);
  return img;
}

std::vector<ChatMessage> Session::build_request(bool final_turn,
                                                const std::optional<std::string>& user_text,
                                                const RasterImage& image,
                                                std::string& history) const {
  std::vector<ChatMessage> messages;
  if (cfg_.sketch_enabled) messages.push_back(ChatMessage::system(build_system_prompt(cfg_)));

  std::vector<MessagePart> parts;
  if (cfg_.mode == SessionMode::Stepwise) {
    auto guards = stepwise_guards();
    parts.push_back(TextPart{final_turn ? guards.final_answer_guard : guards.one_stroke_guard});
  }
  parts.push_back(TextPart{build_task_prompt(task_)});
  if (user_text) parts.push_back(TextPart{*user_text});

  history.clear();
  if (cfg_.mode == SessionMode::Stepwise && cfg_.include_text_history &&
      !accumulated_.strokes.empty()) {
    AnnotationSet prior;
    prior.strokes = accumulated_.strokes;
    history = serialize_annotation(prior, Dialect::XmlStyle);
    parts.push_back(TextPart{
        fill_template(prompt_asset("history_preamble.txt"), {{"history", history}})});
  }
  parts.push_back(ImagePart{std::make_shared<const RasterImage>(image)});
  messages.push_back(ChatMessage::user(std::move(parts)));
  return messages;
}

TurnRecord& Session::finish_turn(TurnRecord record) {
  turns_.push_back(std::move(record));
  if (options_.event_log) {
    nlohmann::json event = turns_.back().to_json();
    event["event"] = "turn";
    event["session"] = id_;
    event["status"] = to_string(status_);
    append_line(*options_.event_log, event.dump());
  }
  return turns_.back();
}

void Session::fail_parse(TurnRecord record, const std::string& why) {
  status_ = SessionStatus::Failed;
  record.notes.push_back("parse failure: " + why);
  finish_turn(std::move(record));
  throw SessionError(SessionErrorKind::ParseFailure,
                     fmt::format("session {}: turn {}: {}", id_, turns_.back().index, why));
}

const TurnRecord& Session::step(std::optional<std::string> user_text,
                                std::optional<RasterImage> new_image) {
  if (status_ == SessionStatus::Done || status_ == SessionStatus::Failed)
    throw SessionError(SessionErrorKind::Precondition,
                       fmt::format("session {} is {}", id_, to_string(status_)));

  TurnRecord record;
  record.index = static_cast<int>(turns_.size()) + 1;
  record.user_text = user_text;
  // Restored if the model call fails, so a failed turn leaves no trace.
  auto saved_base = base_;
  auto saved_strokes = accumulated_.strokes;
  if (new_image) {
    base_ = std::make_shared<const RasterImage>(std::move(*new_image));
    accumulated_.strokes.clear();
    record.image_reset = true;
  }

  const bool stepwise = cfg_.mode == SessionMode::Stepwise;
  const bool final_turn = stepwise && status_ == SessionStatus::AwaitingFinal;
  record.final_turn = final_turn;

  auto image = std::make_shared<const RasterImage>(feedback_image());
  record.sent_image = image;
  record.sent_image_sha256 = pixel_digest(*image);
  auto messages = build_request(final_turn, user_text, *image, record.sent_text_history);

  // Gateway failures leave the session untouched so the turn can be retried.
  std::string response;
  try {
    response = gateway_.complete(messages, provider_);
  } catch (const GatewayError& e) {
    base_ = std::move(saved_base);
    accumulated_.strokes = std::move(saved_strokes);
    throw SessionError(SessionErrorKind::Gateway, fmt::format("session {}: {}", id_, e.what()));
  }
  record.response = response;

  if (final_turn) {
    if (turn_limit_exceeded_) record.notes.push_back("TurnLimitExceeded");
    auto answer = extract_final_answer(response);
    if (!answer) {
      answer = trim(response);
      record.notes.push_back("final turn without <final_answer>; using the whole reply");
    }
    record.final_answer = answer;
    final_answer_ = answer;
    status_ = SessionStatus::Done;
    return finish_turn(std::move(record));
  }

  if (!cfg_.sketch_enabled) {
    // Answer-only baseline: the reply is the answer.
    auto answer = extract_final_answer(response);
    record.final_answer = answer ? *answer : trim(response);
    final_answer_ = record.final_answer;
    status_ = SessionStatus::Done;
    return finish_turn(std::move(record));
  }

  AnnotationSet parsed;
  try {
    parsed = parse_annotation(response);
  } catch (const ParseError& e) {
    if (stepwise && e.kind() == ParseErrorKind::NoAnswerBlock) {
      if (auto answer = extract_final_answer(response)) {
        record.notes.push_back("stroke turn answered directly; treated as final");
        record.final_answer = answer;
        final_answer_ = answer;
        status_ = SessionStatus::Done;
        return finish_turn(std::move(record));
      }
    }
    fail_parse(std::move(record), e.what());
  }

  if (!stepwise) {
    record.delta = parsed;
    accumulated_.concept_name = parsed.concept_name;
    accumulated_.strokes = parsed.strokes;
    accumulated_.final_answer = parsed.final_answer;
    record.final_answer = parsed.final_answer;
    final_answer_ = parsed.final_answer;
    for (const auto& v : validate(parsed, cfg_.frame))
      record.notes.push_back("violation: " + v.description);
    status_ = SessionStatus::Done;
    return finish_turn(std::move(record));
  }

  if (parsed.strokes.empty()) {
    if (parsed.final_answer) {
      record.final_answer = parsed.final_answer;
      final_answer_ = parsed.final_answer;
      status_ = SessionStatus::Done;
    } else {
      status_ = SessionStatus::AwaitingFinal;
    }
    return finish_turn(std::move(record));
  }

  if (parsed.strokes.size() > 1) {
    record.notes.push_back(fmt::format(
        "guard violation: {} strokes in one turn; only the first was kept", parsed.strokes.size()));
    parsed.strokes.resize(1);
  }
  if (parsed.final_answer)
    record.notes.push_back("guard violation: final answer in a stroke turn was ignored");
  if (!accumulated_.concept_name && parsed.concept_name)
    accumulated_.concept_name = parsed.concept_name;

  Stroke stroke = std::move(parsed.strokes.front());
  std::set<std::string> taken;
  for (const auto& s : accumulated_.strokes) taken.insert(s.id);
  if (taken.count(stroke.id)) {
    std::string renamed = stroke.id;
    for (int k = 2; taken.count(renamed); ++k) renamed = fmt::format("{}_{}", stroke.id, k);
    record.notes.push_back(fmt::format("duplicate stroke id {} renamed to {}", stroke.id, renamed));
    stroke.id = renamed;
  }
  AnnotationSet single;
  single.strokes.push_back(stroke);
  for (const auto& v : validate(single, cfg_.frame))
    record.notes.push_back("violation: " + v.description);

  record.delta.concept_name = parsed.concept_name;
  record.delta.strokes.push_back(stroke);
  accumulated_.strokes.push_back(std::move(stroke));
  ++stroke_turns_;
  return finish_turn(std::move(record));
}

void Session::restore(std::vector<TurnRecord> turns, SessionStatus status) {
  if (!turns_.empty()) throw SessionError(SessionErrorKind::Precondition, "restore needs a fresh session");
  for (auto& t : turns) {
    if (t.image_reset) accumulated_.strokes.clear();
    if (cfg_.mode == SessionMode::SingleTurn) {
      accumulated_ = t.delta;
    } else if (!t.delta.strokes.empty()) {
      if (!accumulated_.concept_name) accumulated_.concept_name = t.delta.concept_name;
      accumulated_.strokes.insert(accumulated_.strokes.end(), t.delta.strokes.begin(), t.delta.strokes.end());
      ++stroke_turns_;
    }
    if (t.final_answer) final_answer_ = t.final_answer;
    if (std::find(t.notes.begin(), t.notes.end(), "TurnLimitExceeded") != t.notes.end())
      turn_limit_exceeded_ = true;
    turns_.push_back(std::move(t));
  }
  status_ = status;
}

RunResult Session::run_single_turn() {
  if (cfg_.mode != SessionMode::SingleTurn)
    throw SessionError(SessionErrorKind::Precondition, "run_single_turn needs a single-turn config");
  if (status_ != SessionStatus::Open || !turns_.empty())
    throw SessionError(SessionErrorKind::Precondition, "session already started");
  step();
  return {accumulated_, final_answer_};
}

RunResult Session::run_multi_turn(std::optional<int> max_turns) {
  if (cfg_.mode != SessionMode::Stepwise)
    throw SessionError(SessionErrorKind::Precondition, "run_multi_turn needs a stepwise config");
  if (status_ == SessionStatus::Done || status_ == SessionStatus::Failed)
    throw SessionError(SessionErrorKind::Precondition, "session already finished");
  const int limit = max_turns.value_or(options_.max_turns);
  if (limit < 1) throw std::invalid_argument("max_turns must be >= 1");

  while (status_ != SessionStatus::Done) {
    if (status_ == SessionStatus::Open && stroke_turns_ >= limit) {
      status_ = SessionStatus::AwaitingFinal;
      turn_limit_exceeded_ = true;
    }
    step();
  }
  AnnotationSet result = accumulated_;
  result.final_answer = final_answer_;
  return {result, final_answer_};
}

std::vector<std::string> scripted_responses(const AnnotationSet& set, SessionMode mode) {
  if (mode == SessionMode::SingleTurn) return {serialize_annotation(set, Dialect::XmlStyle)};
  std::vector<std::string> out;
  for (const auto& s : set.strokes) {
    AnnotationSet one;
    one.concept_name = set.concept_name;
    one.strokes.push_back(s);
    out.push_back(serialize_annotation(one, Dialect::XmlStyle));
  }
  out.push_back("<answer></answer>");
  out.push_back(fmt::format("<final_answer>{}</final_answer>", set.final_answer.value_or("")));
  return out;
}

}  // namespace sketchvlm
