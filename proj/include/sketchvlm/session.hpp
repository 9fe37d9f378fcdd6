#pragma once

// Single-turn and stepwise (one stroke per turn) annotation sessions.

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchvlm/annotation.hpp"
#include "sketchvlm/gateway.hpp"
#include "sketchvlm/overlay.hpp"
#include "sketchvlm/prompts.hpp"
#include "sketchvlm/raster.hpp"

namespace sketchvlm {

enum class SessionStatus { Open, AwaitingFinal, Done, Failed };
std::string to_string(SessionStatus status);
SessionStatus session_status_from_string(const std::string& name);

struct TurnRecord {
  int index = 0;  // 1-based
  std::shared_ptr<const RasterImage> sent_image;
  std::string sent_image_sha256;
  std::string sent_text_history;
  std::optional<std::string> user_text;
  bool image_reset = false;   // a new base image was injected before this turn
  bool final_turn = false;    // sent with the final-answer guard
  std::string response;
  AnnotationSet delta;
  std::optional<std::string> final_answer;
  std::vector<std::string> notes;

  /// Deterministic JSON; the image appears only as its digest.
  nlohmann::json to_json() const;
  static TurnRecord from_json(const nlohmann::json& j);
};

enum class SessionErrorKind { ParseFailure, Gateway, Precondition };

class SessionError : public std::runtime_error {
 public:
  SessionError(SessionErrorKind kind, const std::string& message);
  SessionErrorKind kind() const { return kind_; }

 private:
  SessionErrorKind kind_;
};

struct SessionOptions {
  int max_turns = 40;
  OverlayOptions overlay;
  GridOptions grid;
  std::optional<std::filesystem::path> event_log;  // NDJSON, one record per turn
};

struct RunResult {
  AnnotationSet annotations;
  std::optional<std::string> final_answer;
};

/// One annotation conversation over one image. Single writer: callers
/// serialise access.
class Session {
 public:
  Session(std::string id, RasterImage base_image, PromptConfig cfg, TaskPrompt task,
          ProviderConfig provider, Gateway& gateway, SessionOptions options = {});

  /// Whole annotation plus answer in one call.
  RunResult run_single_turn();
  /// One stroke per turn until the model emits an empty answer, then one
  /// final-answer turn. Reaching `max_turns` stroke turns forces the final turn.
  RunResult run_multi_turn(std::optional<int> max_turns = std::nullopt);

  /// Executes exactly one protocol turn. `new_image` replaces the base image
  /// and starts a fresh stroke layer; the transcript is kept.
  const TurnRecord& step(std::optional<std::string> user_text = std::nullopt,
                         std::optional<RasterImage> new_image = std::nullopt);

  /// Reinstates recorded turns on a fresh session (no model calls). The
  /// current base image is the one passed to the constructor.
  void restore(std::vector<TurnRecord> turns, SessionStatus status);

  const std::string& id() const { return id_; }
  SessionStatus status() const { return status_; }
  const std::vector<TurnRecord>& turns() const { return turns_; }
  /// Strokes accumulated on the current base image.
  const AnnotationSet& annotations() const { return accumulated_; }
  const std::optional<std::string>& final_answer() const { return final_answer_; }
  const RasterImage& base_image() const { return *base_; }
  const PromptConfig& config() const { return cfg_; }
  bool turn_limit_exceeded() const { return turn_limit_exceeded_; }

  /// Overlay of the accumulated strokes over the current base image.
  OverlayDocument overlay() const;
  /// The image a turn would send now: base composited with the accumulated
  /// strokes, grid-augmented when the grid is enabled.
  RasterImage feedback_image() const;

 private:
  std::vector<ChatMessage> build_request(bool final_turn, const std::optional<std::string>& user_text,
                                         const RasterImage& image, std::string& history) const;
  TurnRecord& finish_turn(TurnRecord record);
  [[noreturn]] void fail_parse(TurnRecord record, const std::string& why);

  std::string id_;
  std::shared_ptr<const RasterImage> base_;
  PromptConfig cfg_;
  TaskPrompt task_;
  ProviderConfig provider_;
  Gateway& gateway_;
  SessionOptions options_;
  std::vector<TurnRecord> turns_;
  AnnotationSet accumulated_;
  std::optional<std::string> final_answer_;
  SessionStatus status_ = SessionStatus::Open;
  int stroke_turns_ = 0;
  bool turn_limit_exceeded_ = false;
};

/// Replies a scripted model would give to reproduce `set`: one response in
/// single-turn mode, or one stroke per turn, an empty answer, and the final
/// answer in stepwise mode.
std::vector<std::string> scripted_responses(const AnnotationSet& set, SessionMode mode);

/// Pulls the text of the first <final_answer> element, if any.
std::optional<std::string> extract_final_answer(std::string_view text);

}  // namespace sketchvlm
