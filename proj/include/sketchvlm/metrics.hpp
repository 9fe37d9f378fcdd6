#pragma once

// Scoring procedures and run reports.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sketchvlm/annotation.hpp"
#include "sketchvlm/geometry.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

class EmptyPrediction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Root mean squared distance from each ground-truth point to its nearest
/// predicted point. Throws EmptyPrediction when `pred` is empty.
double rmse_closest(const std::vector<PixelPoint>& gt, const std::vector<PixelPoint>& pred);

using PixelSegment = std::pair<PixelPoint, PixelPoint>;

/// Mean squared endpoint distance of `seg` to the pair (a, b), minimised
/// over both orientations.
double segment_pair_mse(const PixelSegment& seg, PixelPoint a, PixelPoint b);

struct OrderingResult {
  int errors = 0;   // includes missing segments
  int missing = 0;
  int extra = 0;    // segments beyond len(gt) - 1, not scored
  double rate = 0;  // errors / (len(gt) - 1)
};

OrderingResult ordering_errors(const std::vector<PixelPoint>& gt, const std::vector<PixelSegment>& pred);

struct Marker {
  PixelPoint at;
  std::string numeral;
};

struct MarkerResult {
  double location_acc = 0;
  bool count_correct = false;
  int matched = 0;
};

/// Maximum one-to-one matching of markers to the boxes that contain them.
MarkerResult marker_accuracy(const std::vector<PixelRect>& gt_boxes, const std::vector<Marker>& markers);

/// Axis-aligned bounds of an ellipse rotated by `rotation` radians.
PixelRect oval_to_bbox(PixelPoint center, double rx, double ry, double rotation);

double iou(const PixelRect& a, const PixelRect& b);

using ClassBoxes = std::map<std::string, std::vector<PixelRect>>;

struct ImageDetections {
  ClassBoxes preds;  // per class, in emission order
  ClassBoxes gts;
};

struct ApResult {
  std::optional<double> all, small, medium, large;  // unset when no gt falls in the bucket
};

/// AP at IoU 0.5 with all-point interpolation, averaged over classes that
/// have ground truth. Predictions are ranked by image order, then emission
/// order. Size buckets follow COCO area ranges; ground truth outside a
/// bucket, and unmatched predictions outside it, are ignored.
ApResult ap50(const std::vector<ImageDetections>& images);
ApResult ap50(const ClassBoxes& preds, const ClassBoxes& gts);

/// Binary pixel mask; pixel (x, y) is set when its centre lies in the region.
struct RegionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

RegionMask rasterize_polygon(const std::vector<PixelPoint>& polygon, int width, int height);

/// Exact Euclidean distance from every pixel centre to the nearest set pixel
/// centre (infinity when the mask is empty).
std::vector<double> distance_transform(const RegionMask& mask);

struct LabelPlacement {
  PixelPoint anchor;
  std::string name;
};

struct DilationResult {
  double accuracy = 0;  // correct parts / required parts
  int required = 0;
  int correct = 0;
  int missing_label = 0;
  int wrong_position = 0;
  int unknown_names = 0;
  double missing_rate = 0;
  double wrong_position_rate = 0;
};

/// A part counts as correct when some label with its name is anchored
/// inside the part's region dilated by `r` pixels.
DilationResult dilation_accuracy(const std::vector<LabelPlacement>& labels,
                                 const std::map<std::string, RegionMask>& parts, double r);

struct AccuracyResult {
  double acc = 0;
  double stderr_ = 0;  // binomial sqrt(p(1-p)/n)
  std::size_t n = 0;
  std::size_t correct = 0;
};

std::string normalize_answer(std::string_view text);

AccuracyResult answer_accuracy(const std::vector<std::string>& answers, const std::vector<std::string>& truths);

// Extraction of scoreable geometry from annotations.

std::vector<PixelPoint> stroke_points(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                      int height);
/// Consecutive distinct point pairs of every geometry stroke.
std::vector<PixelSegment> stroke_segments(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                          int height);
std::vector<Marker> text_markers(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                 int height);
/// Bounding boxes of the drawn geometry strokes. The class is the id prefix
/// before the last '_' when it names a known class, else the only known
/// class, else "unknown".
ClassBoxes stroke_boxes(const AnnotationSet& set, const CoordinateFrame& frame, int width, int height,
                        const std::vector<std::string>& classes);

// Reports.

struct InstanceScore {
  std::string id;
  TaskKind kind = TaskKind::FreeVQA;
  std::string status = "ok";  // ok | failed | empty_prediction
  std::map<std::string, double> metrics;
  std::optional<std::string> answer;
  std::optional<std::string> truth;
  std::optional<ImageDetections> detections;  // shapes only, for dataset AP
};

struct ScoreOptions {
  std::vector<double> dilation_radii = {0, 5, 10, 20};
};

/// `set` is empty when the run failed for this instance.
InstanceScore score_instance(const TaskInstance& instance, const std::optional<AnnotationSet>& set,
                             const CoordinateFrame& frame, const ScoreOptions& options = {});

struct Aggregate {
  std::string metric;
  double value = 0;
  std::size_t count = 0;
  double dispersion = 0;  // std over instances; binomial stderr for rates of 0/1 outcomes
};

struct MetricReport {
  std::string run_id;
  std::string config_hash;
  std::string tool_version;
  std::vector<InstanceScore> instances;
  std::vector<Aggregate> aggregates;  // sorted by metric name
  std::map<std::string, std::size_t> failures;
};

MetricReport build_report(std::string run_id, std::string config_hash, std::vector<InstanceScore> instances);
const Aggregate* find_aggregate(const MetricReport& report, std::string_view metric);

/// One row per instance; columns id, kind, status, answer, truth, then the
/// sorted union of metric names.
std::string report_csv(const MetricReport& report);
nlohmann::json report_json(const MetricReport& report);

/// Hex SHA-256 of the canonical JSON dump.
std::string config_hash(const nlohmann::json& config);

std::string tool_version();

}  // namespace sketchvlm
