#include "support.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include <unistd.h>

#include <fmt/format.h>

namespace sketchvlm::testing {

namespace fs = std::filesystem;

const char* const kBallDropReply = R"(<s1>
  <points>'x500y100','x500y270','x500y270','x350y400'</points>
  <t_values>0.00,0.50,0.50,1.00</t_values>
  <id>path_1</id>
</s1>
<s2>
  <points>'x350y400','x325y470','x300y540'</points>
  <t_values>0.00,0.50,1.00</t_values>
  <id>drop_1</id>
</s2>
<s3>
  <points>'x300y540','x390y470','x500y670'</points>
  <t_values>0.00,0.50,1.00</t_values>
  <id>path_2</id>
</s3>
<s4>
  <points>'x500y670','x570y690','x640y710'</points>
  <t_values>0.00,0.50,1.00</t_values>
  <id>path_bounce</id>
</s4>
<s5>
  <points>'x640y710','x700y850','x730y950'</points>
  <t_values>0.00,0.60,1.00</t_values>
  <id>drop_2</id>
</s5>
<final_answer>3</final_answer>
)";

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  for (;;) {
    path_ = fs::temp_directory_path() /
            fmt::format("{}-{}-{}", tag, static_cast<long>(::getpid()), counter++);
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
  static const std::string inner = alphabet + " &<>";
  const auto len = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(min_len),
                                                        static_cast<std::int64_t>(max_len)));
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    const bool edge = i == 0 || i + 1 == len;
    const std::string& pool = edge ? alphabet : inner;
    out += pool[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(pool.size()) - 1))];
  }
  return out;
}

std::vector<double> random_ts(Rng& rng, std::size_t n) {
  if (n == 1) return {0.0};
  std::vector<int> hundredths{0, 100};
  for (std::size_t i = 2; i < n; ++i) hundredths.push_back(static_cast<int>(rng.integer(0, 100)));
  std::sort(hundredths.begin(), hundredths.end());
  std::vector<double> ts;
  for (int h : hundredths) ts.push_back(h / 100.0);
  return ts;
}

}  // namespace

AnnotationSet random_annotation(Rng& rng, const CoordinateFrame& frame) {
  AnnotationSet set;
  if (rng.coin()) set.concept_name = random_word(rng, 1, 12);
  const auto n = rng.integer(0, 6);
  for (std::int64_t i = 0; i < n; ++i) {
    Stroke s;
    s.id = fmt::format("{}_{}", random_word(rng, 1, 8), i);
    const bool text = rng.integer(0, 3) == 0;
    const std::size_t m = text ? 1 : static_cast<std::size_t>(rng.integer(1, 12));
    for (std::size_t k = 0; k < m; ++k) {
      GridRef ref{static_cast<int>(rng.integer(0, frame.max_col())),
                  static_cast<int>(rng.integer(0, frame.max_row()))};
      // Occasionally double a point to form a corner.
      if (k > 0 && k + 1 < m && rng.integer(0, 4) == 0) ref = s.points.back();
      s.points.push_back(ref);
    }
    s.t_values = random_ts(rng, m);
    if (text) {
      StrokeText t;
      t.content = random_word(rng, 1, 6);
      t.style.size = static_cast<double>(rng.integer(1, 40)) / 10.0;
      t.style.unit = rng.coin() ? SizeUnit::Pixels : SizeUnit::CellMultiplier;
      static const char* colors[] = {"black", "red", "#ff0066", "#00aa11", "blue"};
      t.style.color = colors[rng.integer(0, 4)];
      s.text = t;
    }
    set.strokes.push_back(std::move(s));
  }
  if (rng.coin()) set.final_answer = random_word(rng, 1, 10);
  return set;
}

OrderingResult oracle_ordering(const std::vector<PixelPoint>& gt, const std::vector<PixelSegment>& pred) {
  auto sq = [](PixelPoint a, PixelPoint b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); };
  const std::size_t pairs = gt.size() - 1;
  std::vector<std::vector<double>> table(pred.size(), std::vector<double>(pairs));
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < pairs; ++j) {
      const double keep = 0.5 * (sq(pred[i].first, gt[j]) + sq(pred[i].second, gt[j + 1]));
      const double flip = 0.5 * (sq(pred[i].first, gt[j + 1]) + sq(pred[i].second, gt[j]));
      table[i][j] = keep < flip ? keep : flip;
    }
  OrderingResult r;
  for (std::size_t i = 0; i < pairs; ++i) {
    if (i >= pred.size()) {
      ++r.missing;
      continue;
    }
    const double best_other = [&] {
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < pairs; ++j)
        if (j != i) b = std::min(b, table[i][j]);
      return b;
    }();
    if (best_other < table[i][i]) ++r.errors;
  }
  r.errors += r.missing;
  r.extra = pred.size() > pairs ? static_cast<int>(pred.size() - pairs) : 0;
  r.rate = static_cast<double>(r.errors) / static_cast<double>(pairs);
  return r;
}

int oracle_marker_matches(const std::vector<PixelRect>& boxes, const std::vector<Marker>& markers) {
  const std::size_t nb = boxes.size();
  const std::size_t full = std::size_t{1} << nb;
  // best[mask] = most markers among those seen so far matched into `mask`.
  std::vector<int> best(full, -1);
  best[0] = 0;
  for (const auto& m : markers) {
    std::vector<int> next = best;
    for (std::size_t mask = 0; mask < full; ++mask) {
      if (best[mask] < 0) continue;
      for (std::size_t b = 0; b < nb; ++b) {
        if (mask & (std::size_t{1} << b)) continue;
        const auto& box = boxes[b];
        if (m.at.x < box.x0 || m.at.x > box.x1 || m.at.y < box.y0 || m.at.y > box.y1) continue;
        const std::size_t to = mask | (std::size_t{1} << b);
        next[to] = std::max(next[to], best[mask] + 1);
      }
    }
    best = std::move(next);
  }
  return *std::max_element(best.begin(), best.end());
}

namespace {

double box_iou(const PixelRect& a, const PixelRect& b) {
  const double ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
  const double ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
  const double inter = ix1 > ix0 && iy1 > iy0 ? (ix1 - ix0) * (iy1 - iy0) : 0.0;
  const double u = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
  return u > 0 ? inter / u : 0.0;
}

bool fits(const PixelRect& r, std::optional<SizeBucket> bucket) {
  if (!bucket) return true;
  const double area = (r.x1 - r.x0) * (r.y1 - r.y0);
  switch (*bucket) {
    case SizeBucket::Small: return area < 32.0 * 32.0;
    case SizeBucket::Medium: return area >= 32.0 * 32.0 && area < 96.0 * 96.0;
    case SizeBucket::Large: return area >= 96.0 * 96.0;
  }
  return false;
}

}  // namespace

std::optional<double> oracle_ap50(const ClassBoxes& preds, const ClassBoxes& gts, std::optional<SizeBucket> bucket) {
  double total = 0;
  int classes = 0;
  for (const auto& [cls, gt_boxes] : gts) {
    int n_gt = 0;
    for (const auto& g : gt_boxes) n_gt += fits(g, bucket) ? 1 : 0;
    if (n_gt == 0) continue;
    ++classes;

    // Outcome per ranked prediction: 1 true positive, 0 false positive,
    // -1 ignored.
    std::vector<int> outcome;
    std::vector<bool> used(gt_boxes.size(), false);
    auto it = preds.find(cls);
    if (it != preds.end()) {
      for (const auto& p : it->second) {
        int pick = -1;
        for (int pass = 0; pass < 2 && pick < 0; ++pass) {
          double best = -1;
          for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
            if (used[g] || fits(gt_boxes[g], bucket) != (pass == 0)) continue;
            const double o = box_iou(p, gt_boxes[g]);
            if (o >= 0.5 && o > best) {
              best = o;
              pick = static_cast<int>(g);
            }
          }
        }
        if (pick >= 0) {
          used[static_cast<std::size_t>(pick)] = true;
          outcome.push_back(fits(gt_boxes[static_cast<std::size_t>(pick)], bucket) ? 1 : -1);
        } else {
          outcome.push_back(fits(p, bucket) ? 0 : -1);
        }
      }
    }
    std::vector<double> prec, rec;
    int tp = 0, seen = 0;
    for (int o : outcome) {
      if (o < 0) continue;
      ++seen;
      tp += o;
      prec.push_back(static_cast<double>(tp) / seen);
      rec.push_back(static_cast<double>(tp) / n_gt);
    }
    double ap = 0;
    for (int level = 1; level <= n_gt; ++level) {
      const double target = static_cast<double>(level) / n_gt;
      double best = 0;
      for (std::size_t k = 0; k < prec.size(); ++k)
        if (rec[k] >= target - 1e-12) best = std::max(best, prec[k]);
      ap += best / n_gt;
    }
    total += ap;
  }
  if (classes == 0) return std::nullopt;
  return total / classes;
}

bool oracle_dilation_hit(const std::vector<PixelPoint>& polygon, int width, int height, PixelPoint anchor,
                         double r) {
  auto inside = [&](double x, double y) {
    bool in = false;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
      const auto& a = polygon[i];
      const auto& b = polygon[j];
      if ((a.y > y) != (b.y > y) && x < a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)) in = !in;
    }
    return in;
  };
  const int ax = static_cast<int>(std::floor(anchor.x));
  const int ay = static_cast<int>(std::floor(anchor.y));
  if (ax < 0 || ay < 0 || ax >= width || ay >= height) return false;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (!inside(x + 0.5, y + 0.5)) continue;
      const double d2 = static_cast<double>((x - ax) * (x - ax) + (y - ay) * (y - ay));
      if (d2 <= r * r) return true;
    }
  return false;
}

double oracle_weighted_kappa(const std::vector<std::vector<double>>& confusion) {
  const std::size_t k = confusion.size();
  double n = 0;
  std::vector<double> rows(k, 0), cols(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      n += confusion[i][j];
      rows[i] += confusion[i][j];
      cols[j] += confusion[i][j];
    }
  double po = 0, pe = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = 1.0 - d * d / static_cast<double>((k - 1) * (k - 1));
      po += w * confusion[i][j] / n;
      pe += w * rows[i] * cols[j] / (n * n);
    }
  return (po - pe) / (1 - pe);
}

std::optional<MazeCell> walk_maze(const MazeGT& maze, const std::vector<Direction>& path) {
  MazeCell at = maze.start;
  for (Direction d : path) {
    const std::uint8_t walls = maze.walls[static_cast<std::size_t>(at.row * maze.cols + at.col)];
    if (walls & (1u << static_cast<int>(d))) return std::nullopt;
    MazeCell next = at;
    switch (d) {
      case Direction::Up: --next.row; break;
      case Direction::Down: ++next.row; break;
      case Direction::Left: --next.col; break;
      case Direction::Right: ++next.col; break;
    }
    if (next.row < 0 || next.col < 0 || next.row >= maze.rows || next.col >= maze.cols) return std::nullopt;
    at = next;
  }
  return at;
}

}  // namespace sketchvlm::testing

namespace sketchvlm::testing {

std::vector<PixelPoint> random_polygon(Rng& rng, int width, int height) {
  const int n = static_cast<int>(rng.integer(3, 8));
  const PixelPoint c{rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height};
  const double reach = 0.25 * std::min(width, height);
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0, 2 * std::numbers::pi));
  std::sort(angles.begin(), angles.end());
  std::vector<PixelPoint> poly;
  for (double a : angles) {
    const double r = rng.uniform(0.3, 1.0) * reach;
    poly.push_back({c.x + r * std::cos(a) + 0.137, c.y + r * std::sin(a) + 0.291});
  }
  return poly;
}

namespace {

PixelRect random_box(Rng& rng, double extent) {
  const double x = rng.uniform(0, extent), y = rng.uniform(0, extent);
  const double w = rng.uniform(4, extent / 2), h = rng.uniform(4, extent / 2);
  return {x, y, x + w, y + h};
}

PixelRect jitter(Rng& rng, const PixelRect& b) {
  const double s = 0.15 * std::max(b.width(), b.height());
  return {b.x0 + rng.uniform(-s, s), b.y0 + rng.uniform(-s, s), b.x1 + rng.uniform(-s, s),
          b.y1 + rng.uniform(-s, s)};
}

}  // namespace

OracleSweep run_metric_oracles(std::uint64_t seed, int fixtures) {
  Rng rng(seed);
  OracleSweep out;
  for (int f = 0; f < fixtures; ++f) {
    ++out.fixtures;

    // Ordering: gt points with noisy, partly shuffled segments.
    {
      const int n = static_cast<int>(rng.integer(2, 8));
      std::vector<PixelPoint> gt;
      for (int i = 0; i < n; ++i) gt.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
      std::vector<PixelSegment> pred;
      const int m = static_cast<int>(rng.integer(0, n + 1));
      for (int i = 0; i < m; ++i) {
        const auto a = static_cast<std::size_t>(rng.integer(0, n - 1));
        const auto b = static_cast<std::size_t>(rng.integer(0, n - 1));
        const bool in_order = rng.uniform01() < 0.6 && i + 1 < n;
        PixelPoint p = in_order ? gt[static_cast<std::size_t>(i)] : gt[a];
        PixelPoint q = in_order ? gt[static_cast<std::size_t>(i) + 1] : gt[b];
        if (rng.coin()) std::swap(p, q);
        p = p + PixelPoint{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        q = q + PixelPoint{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        pred.push_back({p, q});
      }
      const auto got = ordering_errors(gt, pred);
      const auto want = oracle_ordering(gt, pred);
      if (got.errors != want.errors || got.missing != want.missing || std::abs(got.rate - want.rate) > 1e-9)
        ++out.ordering;
    }

    // Markers: overlapping boxes, markers scattered near them.
    {
      std::vector<PixelRect> boxes;
      const int nb = static_cast<int>(rng.integer(0, 8));
      for (int i = 0; i < nb; ++i) boxes.push_back(random_box(rng, 60));
      std::vector<Marker> markers;
      const int nm = static_cast<int>(rng.integer(0, 8));
      for (int i = 0; i < nm; ++i) markers.push_back({{rng.uniform(0, 90), rng.uniform(0, 90)}, std::to_string(i + 1)});
      const auto got = marker_accuracy(boxes, markers);
      const int want = oracle_marker_matches(boxes, markers);
      const double denom = std::max<double>(1.0, static_cast<double>(std::max(boxes.size(), markers.size())));
      const double want_acc = boxes.empty() && markers.empty() ? got.location_acc : want / denom;
      if (got.matched != want || std::abs(got.location_acc - want_acc) > 1e-9 ||
          got.count_correct != (boxes.size() == markers.size()))
        ++out.marker;
    }

    // AP50: up to 8 boxes over two classes, preds jittered from gts plus noise.
    {
      ClassBoxes gts, preds;
      const std::vector<std::string> classes{"circle", "square"};
      const int ng = static_cast<int>(rng.integer(1, 8));
      for (int i = 0; i < ng; ++i) {
        const auto& cls = classes[static_cast<std::size_t>(rng.integer(0, 1))];
        const double extent = rng.coin() ? 60 : 300;
        gts[cls].push_back(random_box(rng, extent));
      }
      const int np = static_cast<int>(rng.integer(0, 8));
      for (int i = 0; i < np; ++i) {
        const auto& cls = classes[static_cast<std::size_t>(rng.integer(0, 1))];
        auto& pool = gts[cls];
        if (!pool.empty() && rng.uniform01() < 0.7)
          preds[cls].push_back(jitter(rng, pool[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(pool.size()) - 1))]));
        else
          preds[cls].push_back(random_box(rng, 300));
      }
      std::erase_if(gts, [](const auto& kv) { return kv.second.empty(); });
      const auto got = ap50(preds, gts);
      const std::array<std::pair<std::optional<double>, std::optional<SizeBucket>>, 4> pairs{
          {{got.all, std::nullopt},
           {got.small, SizeBucket::Small},
           {got.medium, SizeBucket::Medium},
           {got.large, SizeBucket::Large}}};
      for (const auto& [value, bucket] : pairs) {
        const auto want = oracle_ap50(preds, gts, bucket);
        if (value.has_value() != want.has_value() || (value && std::abs(*value - *want) > 1e-9)) {
          ++out.ap;
          break;
        }
      }
    }

    // Dilation: one polygon part, a few anchors at random radii.
    {
      const int w = 48, h = 40;
      const auto poly = random_polygon(rng, w, h);
      const std::map<std::string, RegionMask> parts{{"part", rasterize_polygon(poly, w, h)}};
      bool bad = false;
      for (int k = 0; k < 8; ++k) {
        const PixelPoint anchor{rng.uniform(0, w - 1e-6), rng.uniform(0, h - 1e-6)};
        const double r = std::floor(rng.uniform(0, 12)) + (rng.coin() ? 0.5 : 0.0);
        const auto got = dilation_accuracy({{anchor, "part"}}, parts, r);
        ++out.dilation_checks;
        if ((got.correct == 1) != oracle_dilation_hit(poly, w, h, anchor, r)) bad = true;
      }
      if (bad) ++out.dilation;
    }
  }
  return out;
}

}  // namespace sketchvlm::testing
