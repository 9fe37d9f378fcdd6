#pragma once

// Prompt construction from the versioned templates in prompts/*.txt.

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchvlm/annotation.hpp"

namespace sketchvlm {

enum class SessionMode { SingleTurn, Stepwise };

struct PromptConfig {
  CoordinateFrame frame = CoordinateFrame::grid(50, 50);
  bool grid_enabled = true;
  SessionMode mode = SessionMode::SingleTurn;
  bool sketch_enabled = true;
  /// Multi-turn only: also send the serialized strokes of earlier turns.
  bool include_text_history = true;

  /// Throws std::invalid_argument when grid_enabled is set on a normalized frame.
  void check() const;
};

/// {"grid": bool, "mode": "single"|"stepwise", "sketch": bool,
///  "text_history": bool, "frame": {"mode": "grid"|"normalized", "res_x",
///  "res_y", "scale", "origin": "top_left"|"bottom_left"}}. Missing keys keep
/// defaults; bad values throw std::invalid_argument.
nlohmann::json prompt_config_to_json(const PromptConfig& cfg);
PromptConfig prompt_config_from_json(const nlohmann::json& j);

struct FreeQuestion {
  std::string text;
};
struct CountingTask {
  std::string object;
};
struct LabelingTask {
  std::string concept_name;
  std::vector<std::string> labels_hint;
};
using TaskPrompt = std::variant<FreeQuestion, CountingTask, LabelingTask>;

/// Raw template text by asset file name, e.g. "counting.txt". Throws
/// std::out_of_range for unknown names.
const std::string& prompt_asset(std::string_view name);
std::vector<std::string> prompt_asset_names();
/// Hex SHA-256 of an embedded asset.
std::string prompt_asset_sha256(std::string_view name);

/// Replaces `{key}` placeholders. Unknown identifier-like placeholders left
/// in the result raise std::invalid_argument; braces around text that is not
/// an identifier (e.g. "{integer from 1 - 5}") are left alone.
std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values);

/// The sketching system prompt. Normalized frames are described as a
/// scale x scale grid with the frame's origin.
std::string build_system_prompt(const PromptConfig& cfg);

std::string build_task_prompt(const TaskPrompt& task);

struct StepwiseGuards {
  std::string one_stroke_guard;
  std::string final_answer_guard;
};
StepwiseGuards stepwise_guards();

}  // namespace sketchvlm
