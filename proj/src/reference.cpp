#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sketchvlm/coords.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

namespace {

// Polyline stroke with every interior point doubled so it renders with
// sharp corners instead of a smooth fit.
Stroke polyline_stroke(std::string id, const std::vector<GridRef>& raw) {
  std::vector<GridRef> refs;
  for (const auto& r : raw)
    if (refs.empty() || !(refs.back() == r)) refs.push_back(r);
  Stroke s;
  s.id = std::move(id);
  const std::size_t k = refs.size();
  for (std::size_t i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    const int copies = (i == 0 || i + 1 == k) ? 1 : 2;
    for (int c = 0; c < copies; ++c) {
      s.points.push_back(refs[i]);
      s.t_values.push_back(t);
    }
  }
  return s;
}

Stroke text_stroke(std::string id, GridRef at, std::string content) {
  Stroke s;
  s.id = std::move(id);
  s.points = {at};
  s.t_values = {0.0};
  s.text = StrokeText{std::move(content), TextStyle{1.6, SizeUnit::CellMultiplier, "#ff0066"}};
  return s;
}

double point_segment_distance(PixelPoint p, PixelPoint a, PixelPoint b) {
  const PixelPoint ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

}  // namespace

bool point_in_polygon(PixelPoint p, const std::vector<PixelPoint>& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
        p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
      in = !in;
  }
  return in;
}

PixelPoint interior_point(const std::vector<PixelPoint>& polygon) {
  if (polygon.empty()) throw std::invalid_argument("interior_point: empty polygon");
  PixelPoint c{0, 0};
  for (const auto& p : polygon) c = c + (1.0 / static_cast<double>(polygon.size())) * p;
  if (point_in_polygon(c, polygon)) return c;
  double x0 = polygon[0].x, x1 = x0, y0 = polygon[0].y, y1 = y0;
  for (const auto& p : polygon) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  PixelPoint best = c;
  double best_d = -1;
  constexpr int kSamples = 64;
  for (int i = 0; i <= kSamples; ++i) {
    for (int j = 0; j <= kSamples; ++j) {
      PixelPoint q{x0 + (x1 - x0) * i / kSamples, y0 + (y1 - y0) * j / kSamples};
      if (!point_in_polygon(q, polygon)) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < polygon.size(); ++k)
        d = std::min(d, point_segment_distance(q, polygon[k], polygon[(k + 1) % polygon.size()]));
      if (d > best_d) {
        best_d = d;
        best = q;
      }
    }
  }
  return best;
}

AnnotationSet reference_annotation(const TaskInstance& inst, const CoordinateFrame& frame) {
  const int w = inst.width, h = inst.height;
  auto ref = [&](PixelPoint p) { return clamp_to_frame(grid_of(p, frame, w, h), frame); };
  auto refs = [&](const std::vector<PixelPoint>& pts) {
    std::vector<GridRef> out;
    for (const auto& p : pts) out.push_back(ref(p));
    return out;
  };

  AnnotationSet set;
  set.final_answer = inst.answer;
  std::visit(
      [&](const auto& gt) {
        using T = std::decay_t<decltype(gt)>;
        if constexpr (std::is_same_v<T, DotsGT>) {
          set.concept_name = "Connecting the dots in order";
          set.strokes.push_back(polyline_stroke("path_1", refs(gt.points)));
        } else if constexpr (std::is_same_v<T, MazeGT>) {
          set.concept_name = "Tracing the proposed path";
          std::vector<PixelPoint> centres{maze_cell_center(gt, gt.start, w, h)};
          MazeCell at = gt.start;
          for (Direction d : gt.path) {
            if (d == Direction::Up) --at.row;
            if (d == Direction::Down) ++at.row;
            if (d == Direction::Left) --at.col;
            if (d == Direction::Right) ++at.col;
            centres.push_back(maze_cell_center(gt, at, w, h));
          }
          set.strokes.push_back(polyline_stroke("path_1", refs(centres)));
        } else if constexpr (std::is_same_v<T, BallGT>) {
          set.concept_name = "Ball trajectory";
          constexpr std::size_t kMaxSamples = 16;
          std::vector<PixelPoint> pts;
          const std::size_t n = gt.trajectory.size();
          const std::size_t k = std::min(n, kMaxSamples);
          for (std::size_t i = 0; i < k; ++i)
            pts.push_back(gt.trajectory[k == 1 ? 0 : i * (n - 1) / (k - 1)]);
          auto s = polyline_stroke("trajectory_1", refs(pts));
          // A trajectory is a smooth curve: keep single samples.
          std::vector<GridRef> single;
          std::vector<double> ts;
          for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (i > 0 && s.points[i] == s.points[i - 1]) continue;
            single.push_back(s.points[i]);
            ts.push_back(s.t_values[i]);
          }
          s.points = single;
          s.t_values = ts;
          set.strokes.push_back(s);
        } else if constexpr (std::is_same_v<T, CountGT>) {
          set.concept_name = "Numbering each " + gt.object;
          for (std::size_t i = 0; i < gt.boxes.size(); ++i)
            set.strokes.push_back(text_stroke(fmt::format("marker_{}{}", gt.object, i + 1),
                                              ref(gt.boxes[i].center()), std::to_string(i + 1)));
          set.final_answer = std::to_string(gt.boxes.size());
        } else if constexpr (std::is_same_v<T, ShapesGT>) {
          set.concept_name = "Outlining each object";
          for (const auto& [name, boxes] : gt.boxes) {
            for (std::size_t i = 0; i < boxes.size(); ++i) {
              const auto& b = boxes[i];
              set.strokes.push_back(polyline_stroke(
                  fmt::format("{}_{}", name, i + 1),
                  refs({{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}, {b.x0, b.y0}})));
            }
          }
        } else if constexpr (std::is_same_v<T, LabelGT>) {
          set.concept_name = "Labeling: " + gt.concept_name;
          for (const auto& [name, poly] : gt.parts)
            set.strokes.push_back(text_stroke("label_" + name, ref(interior_point(poly)), name));
        }
      },
      inst.truth);
  return set;
}

}  // namespace sketchvlm
