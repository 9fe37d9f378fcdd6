#include "sketchvlm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "sketchvlm/coords.hpp"

namespace sketchvlm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_dist(PixelPoint a, PixelPoint b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas, in place.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == kInf) continue;
    if (f[static_cast<std::size_t>(v[0])] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + double(q) * q) - (f[static_cast<std::size_t>(p)] + double(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (f[static_cast<std::size_t>(v[0])] == kInf) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(q)] = double(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}

bool in_bucket(const PixelRect& box, std::optional<SizeBucket> bucket) {
  return !bucket || size_bucket(box) == *bucket;
}

std::optional<double> class_ap(const std::vector<ImageDetections>& images, const std::string& cls,
                               std::optional<SizeBucket> bucket) {
  std::size_t n_gt = 0;
  for (const auto& img : images) {
    auto it = img.gts.find(cls);
    if (it == img.gts.end()) continue;
    for (const auto& g : it->second) n_gt += in_bucket(g, bucket) ? 1 : 0;
  }
  if (n_gt == 0) return std::nullopt;

  std::vector<bool> tp_flags;
  for (const auto& img : images) {
    auto pit = img.preds.find(cls);
    if (pit == img.preds.end()) continue;
    static const std::vector<PixelRect> kNone;
    auto git = img.gts.find(cls);
    const auto& gts = git == img.gts.end() ? kNone : git->second;
    std::vector<bool> taken(gts.size(), false);
    for (const auto& p : pit->second) {
      // Prefer unmatched in-bucket ground truth, then ignored ground truth.
      int best = -1;
      bool best_ignored = true;
      double best_iou = 0.5;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g]) continue;
        const bool ignored = !in_bucket(gts[g], bucket);
        const double o = iou(p, gts[g]);
        if (o < 0.5) continue;
        if (best == -1 || (best_ignored && !ignored) || (ignored == best_ignored && o > best_iou)) {
          best = static_cast<int>(g);
          best_ignored = ignored;
          best_iou = o;
        }
      }
      if (best >= 0) {
        taken[static_cast<std::size_t>(best)] = true;
        if (!best_ignored) tp_flags.push_back(true);
      } else if (in_bucket(p, bucket)) {
        tp_flags.push_back(false);
      }
    }
  }

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < tp_flags.size(); ++k) {
    tp += tp_flags[k] ? 1 : 0;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0, prev_recall = 0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

std::optional<double> mean_ap(const std::vector<ImageDetections>& images, const std::set<std::string>& classes,
                              std::optional<SizeBucket> bucket) {
  double sum = 0;
  int count = 0;
  for (const auto& cls : classes) {
    if (auto ap = class_ap(images, cls, bucket)) {
      sum += *ap;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::vector<PixelPoint> ref_pixels(const Stroke& s, const CoordinateFrame& frame, int w, int h) {
  std::vector<PixelPoint> out;
  for (const auto& r : s.points) out.push_back(pixel_of(clamp_to_frame(r, frame), frame, w, h));
  return out;
}

}  // namespace

double rmse_closest(const std::vector<PixelPoint>& gt, const std::vector<PixelPoint>& pred) {
  if (gt.empty()) throw std::invalid_argument("rmse_closest: empty ground truth");
  if (pred.empty()) throw EmptyPrediction("rmse_closest: no predicted points");
  double sum = 0;
  for (const auto& g : gt) {
    double best = kInf;
    for (const auto& p : pred) best = std::min(best, sq_dist(g, p));
    sum += best;
  }
  return std::sqrt(sum / static_cast<double>(gt.size()));
}

double segment_pair_mse(const PixelSegment& seg, PixelPoint a, PixelPoint b) {
  const double forward = (sq_dist(seg.first, a) + sq_dist(seg.second, b)) / 2;
  const double backward = (sq_dist(seg.first, b) + sq_dist(seg.second, a)) / 2;
  return std::min(forward, backward);
}

OrderingResult ordering_errors(const std::vector<PixelPoint>& gt, const std::vector<PixelSegment>& pred) {
  if (gt.size() < 2) throw std::invalid_argument("ordering_errors: need at least 2 ground-truth points");
  const std::size_t expected = gt.size() - 1;
  OrderingResult r;
  const std::size_t scored = std::min(expected, pred.size());
  for (std::size_t i = 0; i < scored; ++i) {
    const double own = segment_pair_mse(pred[i], gt[i], gt[i + 1]);
    for (std::size_t j = 0; j < expected; ++j) {
      if (j != i && segment_pair_mse(pred[i], gt[j], gt[j + 1]) < own) {
        ++r.errors;
        break;
      }
    }
  }
  r.missing = static_cast<int>(expected - scored);
  r.extra = static_cast<int>(pred.size() - scored);
  r.errors += r.missing;
  r.rate = static_cast<double>(r.errors) / static_cast<double>(expected);
  return r;
}

MarkerResult marker_accuracy(const std::vector<PixelRect>& gt_boxes, const std::vector<Marker>& markers) {
  // Kuhn's augmenting paths: markers on the left, boxes on the right.
  std::vector<int> box_owner(gt_boxes.size(), -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t m, std::vector<bool>& seen) {
    for (std::size_t b = 0; b < gt_boxes.size(); ++b) {
      if (seen[b] || !gt_boxes[b].contains(markers[m].at)) continue;
      seen[b] = true;
      if (box_owner[b] < 0 || augment(static_cast<std::size_t>(box_owner[b]), seen)) {
        box_owner[b] = static_cast<int>(m);
        return true;
      }
    }
    return false;
  };
  MarkerResult r;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    std::vector<bool> seen(gt_boxes.size(), false);
    if (augment(m, seen)) ++r.matched;
  }
  const std::size_t denom = std::max(gt_boxes.size(), markers.size());
  r.location_acc = denom == 0 ? 1.0 : static_cast<double>(r.matched) / static_cast<double>(denom);
  r.count_correct = markers.size() == gt_boxes.size();
  return r;
}

PixelRect oval_to_bbox(PixelPoint center, double rx, double ry, double rotation) {
  if (!(rx > 0) || !(ry > 0)) throw std::invalid_argument("oval_to_bbox: radii must be positive");
  const double c = std::cos(rotation), s = std::sin(rotation);
  const double hw = std::sqrt(rx * rx * c * c + ry * ry * s * s);
  const double hh = std::sqrt(rx * rx * s * s + ry * ry * c * c);
  return {center.x - hw, center.y - hh, center.x + hw, center.y + hh};
}

double iou(const PixelRect& a, const PixelRect& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

ApResult ap50(const std::vector<ImageDetections>& images) {
  std::set<std::string> classes;
  for (const auto& img : images)
    for (const auto& [cls, boxes] : img.gts) classes.insert(cls);
  return {mean_ap(images, classes, std::nullopt), mean_ap(images, classes, SizeBucket::Small),
          mean_ap(images, classes, SizeBucket::Medium), mean_ap(images, classes, SizeBucket::Large)};
}

ApResult ap50(const ClassBoxes& preds, const ClassBoxes& gts) { return ap50({ImageDetections{preds, gts}}); }

RegionMask rasterize_polygon(const std::vector<PixelPoint>& polygon, int width, int height) {
  RegionMask m{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  if (polygon.size() < 3) return m;
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    std::vector<double> xs;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
      const auto& a = polygon[i];
      const auto& b = polygon[j];
      if ((a.y > cy) != (b.y > cy)) xs.push_back(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel centres x + 0.5 strictly inside [xs[k], xs[k+1]).
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int x = x0; x <= x1; ++x) m.bits[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return m;
}

std::vector<double> distance_transform(const RegionMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.bits[i] ? 0.0 : kInf;

  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int x = 0; x < w; ++x) {
    f.resize(static_cast<std::size_t>(h));
    d.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(static_cast<std::size_t>(w));
    d.resize(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(x)];
  }
  for (auto& g : grid) g = std::sqrt(g);
  return grid;
}

DilationResult dilation_accuracy(const std::vector<LabelPlacement>& labels,
                                 const std::map<std::string, RegionMask>& parts, double r) {
  if (r < 0) throw std::invalid_argument("dilation_accuracy: r must be >= 0");
  DilationResult out;
  out.required = static_cast<int>(parts.size());
  for (const auto& l : labels)
    if (!parts.count(l.name)) ++out.unknown_names;

  for (const auto& [name, mask] : parts) {
    const auto dist = distance_transform(mask);
    bool emitted = false, hit = false;
    for (const auto& l : labels) {
      if (l.name != name) continue;
      emitted = true;
      const int x = static_cast<int>(std::floor(l.anchor.x));
      const int y = static_cast<int>(std::floor(l.anchor.y));
      if (x < 0 || y < 0 || x >= mask.width || y >= mask.height) continue;
      if (dist[static_cast<std::size_t>(y) * mask.width + x] <= r) hit = true;
    }
    if (hit) ++out.correct;
    else if (emitted) ++out.wrong_position;
    else ++out.missing_label;
  }
  if (out.required > 0) {
    out.accuracy = static_cast<double>(out.correct) / out.required;
    out.missing_rate = static_cast<double>(out.missing_label) / out.required;
    out.wrong_position_rate = static_cast<double>(out.wrong_position) / out.required;
  }
  return out;
}

AccuracyResult answer_accuracy(const std::vector<std::string>& answers, const std::vector<std::string>& truths) {
  if (answers.size() != truths.size()) throw std::invalid_argument("answer_accuracy: length mismatch");
  AccuracyResult r;
  r.n = answers.size();
  for (std::size_t i = 0; i < r.n; ++i)
    if (normalize_answer(answers[i]) == normalize_answer(truths[i])) ++r.correct;
  if (r.n > 0) {
    r.acc = static_cast<double>(r.correct) / static_cast<double>(r.n);
    r.stderr_ = std::sqrt(r.acc * (1 - r.acc) / static_cast<double>(r.n));
  }
  return r;
}

std::vector<PixelPoint> stroke_points(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                      int height) {
  std::vector<PixelPoint> out;
  for (const auto& s : set.strokes) {
    if (s.is_text()) continue;
    auto pts = ref_pixels(s, frame, width, height);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

std::vector<PixelSegment> stroke_segments(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                          int height) {
  std::vector<PixelSegment> out;
  for (const auto& s : set.strokes) {
    if (s.is_text()) continue;
    auto pts = ref_pixels(s, frame, width, height);
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i] == pts[i - 1])) out.emplace_back(pts[i - 1], pts[i]);
  }
  return out;
}

std::vector<Marker> text_markers(const AnnotationSet& set, const CoordinateFrame& frame, int width,
                                 int height) {
  std::vector<Marker> out;
  for (const auto& s : set.strokes) {
    if (!s.is_text() || s.points.empty()) continue;
    out.push_back({pixel_of(clamp_to_frame(s.points.front(), frame), frame, width, height), s.text->content});
  }
  return out;
}

ClassBoxes stroke_boxes(const AnnotationSet& set, const CoordinateFrame& frame, int width, int height,
                        const std::vector<std::string>& classes) {
  ClassBoxes out;
  for (const auto& s : set.strokes) {
    if (s.is_text() || s.points.empty()) continue;
    std::vector<PixelPoint> pts;
    for (const auto& prim : stroke_to_primitives(s, frame, width, height)) {
      auto flat = flatten(prim);
      pts.insert(pts.end(), flat.begin(), flat.end());
    }
    if (pts.empty()) continue;
    PixelRect box{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
    for (const auto& p : pts) {
      box.x0 = std::min(box.x0, p.x), box.y0 = std::min(box.y0, p.y);
      box.x1 = std::max(box.x1, p.x), box.y1 = std::max(box.y1, p.y);
    }
    std::string cls = "unknown";
    const auto cut = s.id.rfind('_');
    const std::string prefix = cut == std::string::npos ? s.id : s.id.substr(0, cut);
    if (std::find(classes.begin(), classes.end(), prefix) != classes.end()) cls = prefix;
    else if (classes.size() == 1) cls = classes.front();
    out[cls].push_back(box);
  }
  return out;
}

}  // namespace sketchvlm
