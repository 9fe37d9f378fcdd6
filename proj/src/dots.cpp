#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sketchvlm/random.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

namespace {

constexpr int kDotsMargin = 40;

double cross(PixelPoint o, PixelPoint a, PixelPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double point_segment_distance(PixelPoint p, PixelPoint a, PixelPoint b) {
  const PixelPoint ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool segments_intersect(PixelPoint a, PixelPoint b, PixelPoint c, PixelPoint d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on = [](PixelPoint p, PixelPoint q, PixelPoint r, double c) {
    return c == 0 && std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
           std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  return on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4);
}

void dp_recurse(const std::vector<PixelPoint>& pts, std::size_t lo, std::size_t hi, double tol,
                std::vector<bool>& keep) {
  if (hi <= lo + 1) return;
  double best = -1;
  std::size_t idx = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > best) {
      best = d;
      idx = i;
    }
  }
  if (best > tol) {
    keep[idx] = true;
    dp_recurse(pts, lo, idx, tol, keep);
    dp_recurse(pts, idx, hi, tol, keep);
  }
}

double closed_length(const std::vector<PixelPoint>& poly) {
  double len = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) len += distance(poly[i], poly[(i + 1) % poly.size()]);
  return len;
}

// Drops a repeated closing vertex and consecutive duplicates.
std::vector<PixelPoint> open_ring(const std::vector<PixelPoint>& contour) {
  std::vector<PixelPoint> out;
  for (const auto& p : contour)
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  return out;
}

PixelPoint label_anchor_for(PixelPoint dot, PixelPoint outward, double radius) {
  const double n = std::hypot(outward.x, outward.y);
  const PixelPoint dir = n > 0 ? (1.0 / n) * outward : PixelPoint{0.7071, -0.7071};
  return dot + (radius + 12) * dir;
}

}  // namespace

TaskInstance gen_random_dots(int n, std::uint64_t seed, const DotsOptions& options) {
  if (n < 2) throw std::invalid_argument("gen_random_dots: n must be >= 2");
  Rng rng(seed);
  const double min_dist = 3 * options.dot_radius;
  std::vector<PixelPoint> pts;
  int attempts = 0;
  while (static_cast<int>(pts.size()) < n) {
    if (++attempts > options.max_attempts)
      throw PlacementFailure(fmt::format("could not place {} dots in {}x{}", n, options.width, options.height));
    PixelPoint p{static_cast<double>(rng.integer(kDotsMargin, options.width - kDotsMargin)),
                 static_cast<double>(rng.integer(kDotsMargin, options.height - kDotsMargin))};
    bool ok = std::all_of(pts.begin(), pts.end(), [&](PixelPoint q) { return distance(p, q) >= min_dist; });
    if (ok) pts.push_back(p);
  }

  DotsGT gt;
  gt.dot_radius = options.dot_radius;
  gt.points = pts;
  for (int i = 0; i < n; ++i) {
    gt.labels.push_back(i + 1);
    gt.label_anchors.push_back(label_anchor_for(pts[i], {1, -1}, options.dot_radius));
  }

  TaskInstance inst;
  inst.id = fmt::format("dots-{}-{}", n, seed);
  inst.kind = TaskKind::ConnectDots;
  inst.image = inst.id + ".png";
  inst.width = options.width;
  inst.height = options.height;
  inst.question = fill_template(prompt_asset("task_connect_dots.txt"), {{"count", std::to_string(n)}});
  inst.truth = std::move(gt);
  return inst;
}

std::vector<PixelPoint> douglas_peucker(const std::vector<PixelPoint>& points, double tolerance) {
  if (points.size() <= 2) return points;
  std::vector<bool> keep(points.size(), false);
  keep.front() = keep.back() = true;
  dp_recurse(points, 0, points.size() - 1, tolerance, keep);
  std::vector<PixelPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep[i]) out.push_back(points[i]);
  return out;
}

std::vector<PixelPoint> resample_closed(const std::vector<PixelPoint>& polygon, int count) {
  if (polygon.size() < 2 || count < 1) throw std::invalid_argument("resample_closed: bad input");
  const double total = closed_length(polygon);
  const double step = total / count;
  std::vector<PixelPoint> out;
  std::size_t edge = 0;
  double edge_start = 0;  // arc length at polygon[edge]
  for (int k = 0; k < count; ++k) {
    const double s = k * step;
    for (;;) {
      const double len = distance(polygon[edge], polygon[(edge + 1) % polygon.size()]);
      if (s <= edge_start + len || edge + 1 == polygon.size()) {
        const double u = len > 0 ? std::clamp((s - edge_start) / len, 0.0, 1.0) : 0.0;
        const PixelPoint a = polygon[edge], b = polygon[(edge + 1) % polygon.size()];
        out.push_back(u == 0 ? a : a + u * (b - a));
        break;
      }
      edge_start += len;
      ++edge;
    }
  }
  return out;
}

bool closed_polygon_self_intersects(const std::vector<PixelPoint>& polygon) {
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
        return true;
    }
  }
  return false;
}

TaskInstance gen_outline_dots(const std::vector<std::vector<PixelPoint>>& contours,
                              std::uint64_t seed, const DotsOptions& options) {
  std::vector<PixelPoint> main;
  double best = 0;
  for (const auto& c : contours) {
    auto ring = open_ring(c);
    if (ring.size() < 3) continue;
    const double len = closed_length(ring);
    if (len > best) {
      best = len;
      main = std::move(ring);
    }
  }
  if (main.empty()) throw DegenerateContour("no closed contour with at least 3 vertices");

  auto [minx, maxx] = std::minmax_element(main.begin(), main.end(),
                                          [](auto a, auto b) { return a.x < b.x; });
  auto [miny, maxy] = std::minmax_element(main.begin(), main.end(),
                                          [](auto a, auto b) { return a.y < b.y; });
  const double x0 = minx->x, y0 = miny->y;
  const double bw = maxx->x - x0, bh = maxy->y - y0;
  const double extent = std::max(bw, bh);
  if (!(extent > 0)) throw DegenerateContour("contour has zero extent");

  // Simplify the ring as two open halves split at the vertex farthest from
  // the first one, so the first vertex survives.
  std::size_t far = 0;
  for (std::size_t i = 1; i < main.size(); ++i)
    if (distance(main[i], main[0]) > distance(main[far], main[0])) far = i;
  const double tol = kSimplifyTolerance * std::hypot(bw, bh);
  std::vector<PixelPoint> first(main.begin(), main.begin() + static_cast<long>(far) + 1);
  std::vector<PixelPoint> second(main.begin() + static_cast<long>(far), main.end());
  second.push_back(main.front());
  auto a = douglas_peucker(first, tol);
  auto b = douglas_peucker(second, tol);
  std::vector<PixelPoint> simplified(a.begin(), a.end());
  simplified.insert(simplified.end(), b.begin() + 1, b.end() - 1);
  if (simplified.size() < 3) throw DegenerateContour("contour collapses under simplification");
  if (closed_polygon_self_intersects(simplified))
    throw SelfIntersecting("simplified contour intersects itself");

  // Fit the unit-square-normalized contour into the image.
  const double margin = 0.1 * std::min(options.width, options.height);
  const double side = std::min(options.width, options.height) - 2 * margin;
  const double ox = (options.width - side * bw / extent) / 2;
  const double oy = (options.height - side * bh / extent) / 2;
  for (auto& p : simplified) p = {ox + (p.x - x0) / extent * side, oy + (p.y - y0) / extent * side};

  Rng rng(seed);
  const auto start = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(simplified.size()) - 1));
  std::rotate(simplified.begin(), simplified.begin() + static_cast<long>(start), simplified.end());
  if (rng.coin()) std::reverse(simplified.begin() + 1, simplified.end());

  DotsGT gt;
  gt.dot_radius = options.dot_radius;
  gt.points = resample_closed(simplified, kOutlineDots);
  gt.contour = simplified;
  PixelPoint centroid{0, 0};
  for (const auto& p : gt.points) centroid = centroid + (1.0 / kOutlineDots) * p;
  for (int i = 0; i < kOutlineDots; ++i) {
    gt.labels.push_back(i + 1);
    gt.label_anchors.push_back(label_anchor_for(gt.points[i], gt.points[i] - centroid, options.dot_radius));
  }

  TaskInstance inst;
  inst.id = fmt::format("outline-{}", seed);
  inst.kind = TaskKind::ConnectDots;
  inst.image = inst.id + ".png";
  inst.width = options.width;
  inst.height = options.height;
  inst.question = fill_template(prompt_asset("task_connect_dots.txt"), {{"count", std::to_string(kOutlineDots)}});
  inst.truth = std::move(gt);
  return inst;
}

}  // namespace sketchvlm
