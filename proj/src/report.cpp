#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "sketchvlm/metrics.hpp"
#include "util.hpp"

namespace sketchvlm {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

// 0/1 outcome metrics report a binomial standard error.
bool is_rate(const std::string& metric) {
  return metric == "answer_correct" || metric == "count_correct";
}

}  // namespace

std::string tool_version() { return SKETCHVLM_VERSION; }

std::string config_hash(const nlohmann::json& config) { return sha256_hex(config.dump()); }

InstanceScore score_instance(const TaskInstance& inst, const std::optional<AnnotationSet>& set,
                             const CoordinateFrame& frame, const ScoreOptions& options) {
  InstanceScore s;
  s.id = inst.id;
  s.kind = inst.kind;
  s.truth = inst.answer;
  if (!set) {
    s.status = "failed";
    if (inst.answer) s.metrics["answer_correct"] = 0;
    return s;
  }
  s.answer = set->final_answer;
  if (inst.answer)
    s.metrics["answer_correct"] =
        set->final_answer && normalize_answer(*set->final_answer) == normalize_answer(*inst.answer) ? 1 : 0;

  const int w = inst.width, h = inst.height;
  std::visit(
      [&](const auto& gt) {
        using T = std::decay_t<decltype(gt)>;
        if constexpr (std::is_same_v<T, DotsGT>) {
          const auto pts = stroke_points(*set, frame, w, h);
          if (pts.empty()) {
            s.status = "empty_prediction";
          } else {
            s.metrics["rmse"] = rmse_closest(gt.points, pts);
          }
          const auto ord = ordering_errors(gt.points, stroke_segments(*set, frame, w, h));
          s.metrics["ordering_errors"] = ord.errors;
          s.metrics["ordering_error_rate"] = ord.rate;
        } else if constexpr (std::is_same_v<T, CountGT>) {
          const auto m = marker_accuracy(gt.boxes, text_markers(*set, frame, w, h));
          s.metrics["location_acc"] = m.location_acc;
          s.metrics["count_correct"] = m.count_correct ? 1 : 0;
        } else if constexpr (std::is_same_v<T, ShapesGT>) {
          std::vector<std::string> classes;
          for (const auto& [name, boxes] : gt.boxes) classes.push_back(name);
          ImageDetections det{stroke_boxes(*set, frame, w, h, classes), gt.boxes};
          if (auto ap = ap50({det}).all) s.metrics["ap50"] = *ap;
          s.detections = std::move(det);
        } else if constexpr (std::is_same_v<T, LabelGT>) {
          std::map<std::string, RegionMask> masks;
          for (const auto& [name, poly] : gt.parts) masks[name] = rasterize_polygon(poly, w, h);
          std::vector<LabelPlacement> labels;
          for (const auto& m : text_markers(*set, frame, w, h)) labels.push_back({m.at, m.numeral});
          for (double r : options.dilation_radii) {
            const auto d = dilation_accuracy(labels, masks, r);
            s.metrics[fmt::format("label_acc_r{}", r)] = d.accuracy;
            if (r == options.dilation_radii.front()) {
              s.metrics["missing_label_rate"] = d.missing_rate;
              s.metrics["wrong_position_rate"] = d.wrong_position_rate;
            }
          }
        }
      },
      inst.truth);
  return s;
}

MetricReport build_report(std::string run_id, std::string config_hash_value, std::vector<InstanceScore> instances) {
  MetricReport report;
  report.run_id = std::move(run_id);
  report.config_hash = std::move(config_hash_value);
  report.tool_version = tool_version();
  report.instances = std::move(instances);

  std::map<std::string, std::vector<double>> values;
  for (const auto& inst : report.instances) {
    for (const auto& [name, v] : inst.metrics) values[name].push_back(v);
    if (inst.status != "ok") ++report.failures[inst.status];
  }
  for (const auto& [name, vs] : values) {
    Aggregate a;
    a.metric = name;
    a.count = vs.size();
    double sum = 0;
    for (double v : vs) sum += v;
    a.value = sum / static_cast<double>(vs.size());
    if (is_rate(name)) {
      a.dispersion = std::sqrt(a.value * (1 - a.value) / static_cast<double>(vs.size()));
    } else {
      double ss = 0;
      for (double v : vs) ss += (v - a.value) * (v - a.value);
      a.dispersion = std::sqrt(ss / static_cast<double>(vs.size()));
    }
    report.aggregates.push_back(a);
  }

  // Dataset-level AP over every shapes instance.
  std::vector<ImageDetections> dets;
  for (const auto& inst : report.instances)
    if (inst.detections) dets.push_back(*inst.detections);
  if (!dets.empty()) {
    const auto ap = ap50(dets);
    auto add = [&](const char* name, const std::optional<double>& v) {
      if (v) report.aggregates.push_back({name, *v, dets.size(), 0});
    };
    add("dataset_ap50", ap.all);
    add("dataset_ap50_small", ap.small);
    add("dataset_ap50_medium", ap.medium);
    add("dataset_ap50_large", ap.large);
  }
  std::sort(report.aggregates.begin(), report.aggregates.end(),
            [](const Aggregate& a, const Aggregate& b) { return a.metric < b.metric; });
  return report;
}

const Aggregate* find_aggregate(const MetricReport& report, std::string_view metric) {
  for (const auto& a : report.aggregates)
    if (a.metric == metric) return &a;
  return nullptr;
}

std::string report_csv(const MetricReport& report) {
  std::set<std::string> columns;
  for (const auto& inst : report.instances)
    for (const auto& [name, v] : inst.metrics) columns.insert(name);
  std::ostringstream out;
  out << "id,kind,status,answer,truth";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& inst : report.instances) {
    out << csv_field(inst.id) << ',' << to_string(inst.kind) << ',' << inst.status << ','
        << csv_field(inst.answer.value_or("")) << ',' << csv_field(inst.truth.value_or(""));
    for (const auto& c : columns) {
      out << ',';
      if (auto it = inst.metrics.find(c); it != inst.metrics.end()) out << number(it->second);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json report_json(const MetricReport& report) {
  nlohmann::json j;
  j["run_id"] = report.run_id;
  j["config_hash"] = report.config_hash;
  j["tool_version"] = report.tool_version;
  j["instances"] = report.instances.size();
  nlohmann::json aggs = nlohmann::json::object();
  for (const auto& a : report.aggregates)
    aggs[a.metric] = {{"value", a.value}, {"count", a.count}, {"dispersion", a.dispersion}};
  j["aggregates"] = aggs;
  j["failures"] = report.failures;
  return j;
}

}  // namespace sketchvlm
