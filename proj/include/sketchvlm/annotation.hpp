#pragma once

// Annotation data model and the stroke output grammar.
//
// Two dialects share one data model:
//   * XmlStyle: the `<answer><strokes><sN>...</sN></strokes></answer>` grammar
//     the prompts ask models to emit (see docs/grammar.md).
//   * Json: the `.anno.json` document used for files and the HTTP service.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sketchvlm {

struct GridRef {
  int col = 0;
  int row = 0;

  friend bool operator==(const GridRef&, const GridRef&) = default;
};

enum class FrameMode { GridCells, Normalized };
enum class Origin { TopLeft, BottomLeft };

/// Coordinate convention mapping `xAyB` tokens to image positions.
///
/// GridCells frames address (res_x + 1) x (res_y + 1) cells labelled
/// 0..res_x / 0..res_y on the appended rulers. Normalized frames address
/// 0..scale on both axes.
struct CoordinateFrame {
  FrameMode mode = FrameMode::GridCells;
  int res_x = 50;
  int res_y = 50;
  int scale = 1000;
  Origin origin = Origin::BottomLeft;

  static CoordinateFrame grid(int res_x, int res_y,
                              Origin origin = Origin::BottomLeft);
  static CoordinateFrame normalized(int scale = 1000,
                                    Origin origin = Origin::TopLeft);

  /// Largest legal column / row for this frame.
  int max_col() const { return mode == FrameMode::GridCells ? res_x : scale; }
  int max_row() const { return mode == FrameMode::GridCells ? res_y : scale; }

  /// Throws std::invalid_argument if a resolution or scale is < 1.
  void check() const;

  friend bool operator==(const CoordinateFrame&,
                         const CoordinateFrame&) = default;
};

enum class SizeUnit { CellMultiplier, Pixels };

struct TextStyle {
  double size = 1.0;
  SizeUnit unit = SizeUnit::CellMultiplier;
  std::string color = "black";

  friend bool operator==(const TextStyle&, const TextStyle&) = default;
};

struct StrokeText {
  std::string content;
  TextStyle style;

  friend bool operator==(const StrokeText&, const StrokeText&) = default;
};

struct Stroke {
  std::string id;
  std::vector<GridRef> points;
  std::vector<double> t_values;
  std::optional<StrokeText> text;

  bool is_text() const { return text.has_value(); }

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct AnnotationSet {
  std::optional<std::string> concept_name;
  std::vector<Stroke> strokes;
  std::optional<std::string> final_answer;
  // Set by the parser when <final_answer> appeared before the last stroke.
  // Never serialized; reported by validate().
  bool early_final_answer = false;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

enum class ParseErrorKind { NoAnswerBlock, CountMismatch, BadToken, BadJson };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string detail, std::size_t offset = 0);

  ParseErrorKind kind() const { return kind_; }
  /// Stroke id for CountMismatch; empty otherwise.
  const std::string& detail() const { return detail_; }
  /// Byte offset into the (repaired) text for BadToken.
  std::size_t offset() const { return offset_; }

 private:
  ParseErrorKind kind_;
  std::string detail_;
  std::size_t offset_;
};

enum class Dialect { XmlStyle, Json };

/// Applies the enumerated lenient-repair rules: strips markdown code fences
/// and XML comments. Text that already parses cleanly comes back unchanged
/// apart from those.
std::string repair_model_output(std::string_view text);

/// Parses raw model output in the XML-style dialect.
///
/// The first `<answer>` block is used. Output with no `<answer>` block but
/// bare `<sN>` or `<strokes>` elements is parsed as if wrapped. A missing
/// `</answer>` extends the block to the end of the text. `<final_answer>` is
/// searched for anywhere after the block opens.
AnnotationSet parse_annotation(std::string_view text);

/// Parses the JSON dialect.
AnnotationSet parse_annotation_json(std::string_view text);

std::string serialize_annotation(const AnnotationSet& set, Dialect dialect);

nlohmann::json annotation_to_json(const AnnotationSet& set);
AnnotationSet annotation_from_json(const nlohmann::json& doc);

/// Affinely rescales t-values to [0, 1] and swaps near-equal t pairs at
/// doubled corner points so the list is nondecreasing. Applied by both parsers.
void normalize_t_values(Stroke& stroke);

enum class ViolationKind {
  OutOfRange,
  TOutOfUnit,
  TDecreasing,
  TEndpoints,
  CountMismatch,
  EmptyStroke,
  DuplicateId,
  MultiPointText,
  BadTextStyle,
  EarlyFinalAnswer,
};

struct Violation {
  ViolationKind kind;
  std::string stroke_id;
  std::string description;
};

std::vector<Violation> validate(const AnnotationSet& set,
                                const CoordinateFrame& frame);

std::string to_string(ViolationKind kind);

/// Formats a grid token without quotes, e.g. "x15y31".
std::string grid_token(const GridRef& ref);

}  // namespace sketchvlm
