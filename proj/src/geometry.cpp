#include "sketchvlm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "sketchvlm/coords.hpp"

namespace sketchvlm {

double distance(PixelPoint a, PixelPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

double bernstein3(int k, double t) {
  const double s = 1.0 - t;
  switch (k) {
    case 0: return s * s * s;
    case 1: return 3.0 * t * s * s;
    case 2: return 3.0 * t * t * s;
    default: return t * t * t;
  }
}

PixelPoint CubicBezier::eval(double t) const {
  if (t == 0.0) return p0;
  if (t == 1.0) return p3;
  const double b0 = bernstein3(0, t), b1 = bernstein3(1, t), b2 = bernstein3(2, t),
               b3 = bernstein3(3, t);
  return {b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
          b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y};
}

PixelPoint primitive_start(const PathPrimitive& prim) {
  return std::visit(
      [](const auto& p) -> PixelPoint {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Dot>) return p.center;
        else if constexpr (std::is_same_v<T, Line>) return p.a;
        else if constexpr (std::is_same_v<T, CubicChain>) return p.segments.front().p0;
        else return p.points.front();
      },
      prim);
}

PixelPoint primitive_end(const PathPrimitive& prim) {
  return std::visit(
      [](const auto& p) -> PixelPoint {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Dot>) return p.center;
        else if constexpr (std::is_same_v<T, Line>) return p.b;
        else if constexpr (std::is_same_v<T, CubicChain>) return p.segments.back().p3;
        else return p.points.back();
      },
      prim);
}

namespace {

std::vector<double> rescale_unit(std::span<const double> ts) {
  std::vector<double> out(ts.begin(), ts.end());
  if (out.size() < 2) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const double lo = out.front();
  const double hi = out.back();
  if (hi > lo) {
    for (double& t : out) t = (t - lo) / (hi - lo);
  } else {
    // No usable parameterisation: spread uniformly by index.
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<double>(i) / static_cast<double>(out.size() - 1);
    }
  }
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

}  // namespace

std::vector<SampleRun> split_corners(std::span<const PixelPoint> points,
                                     std::span<const double> ts, double epsilon) {
  if (points.size() != ts.size()) {
    throw std::invalid_argument("split_corners: points and ts differ in length");
  }
  std::vector<SampleRun> runs;
  if (points.empty()) return runs;

  std::size_t begin = 0;
  auto close_run = [&](std::size_t end) {  // [begin, end)
    SampleRun run;
    run.points.assign(points.begin() + begin, points.begin() + end);
    run.ts = rescale_unit(ts.subspan(begin, end - begin));
    runs.push_back(std::move(run));
  };
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const bool corner = distance(points[i], points[i + 1]) <= epsilon &&
                        std::abs(ts[i + 1] - ts[i]) <= kCornerMaxDt + 1e-12;
    if (corner) {
      close_run(i + 1);
      begin = i + 1;
    }
  }
  close_run(points.size());
  return runs;
}

double residual_sum_squares(const CubicBezier& curve, std::span<const PixelPoint> points,
                            std::span<const double> ts) {
  double sum = 0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    const PixelPoint d = curve.eval(ts[j]) - points[j];
    sum += d.x * d.x + d.y * d.y;
  }
  return sum;
}

CubicBezier fit_cubic(std::span<const PixelPoint> points, std::span<const double> ts) {
  if (points.size() != ts.size() || points.size() < 3) {
    throw std::invalid_argument("fit_cubic needs >= 3 samples with matching ts");
  }
  const PixelPoint p0 = points.front();
  const PixelPoint p3 = points.back();

  // Normal equations M [p1 p2]^T = [b1 b2]^T, shared by both axes.
  double m11 = 0, m12 = 0, m22 = 0;
  PixelPoint b1{}, b2{};
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double t = ts[j];
    const double c0 = bernstein3(0, t), c1 = bernstein3(1, t), c2 = bernstein3(2, t),
                 c3 = bernstein3(3, t);
    const PixelPoint r = points[j] - c0 * p0 - c3 * p3;
    m11 += c1 * c1;
    m12 += c1 * c2;
    m22 += c2 * c2;
    b1 = b1 + c1 * r;
    b2 = b2 + c2 * r;
  }

  const double trace = m11 + m22;
  if (!(trace > 1e-14)) {
    throw DegenerateSystem("no interior sample constrains the inner control points");
  }
  const double det = m11 * m22 - m12 * m12;
  if (det > 1e-10 * trace * trace) {
    const PixelPoint p1 = (1.0 / det) * (m22 * b1 - m12 * b2);
    const PixelPoint p2 = (1.0 / det) * (m11 * b2 - m12 * b1);
    return {p0, p1, p2, p3};
  }

  // Rank one: M = trace * u u^T with |u| = 1. Move the chord-thirds guess
  // along u until the normal equations hold.
  const PixelPoint q1 = p0 + (1.0 / 3.0) * (p3 - p0);
  const PixelPoint q2 = p0 + (2.0 / 3.0) * (p3 - p0);
  // Both rows of M are multiples of u; take the longer one.
  const double row1 = std::hypot(m11, m12);
  const double row2 = std::hypot(m12, m22);
  const double u1 = row1 >= row2 ? m11 / row1 : m12 / row2;
  const double u2 = row1 >= row2 ? m12 / row1 : m22 / row2;
  // Residual of the guess projected on u, divided by the eigenvalue.
  const PixelPoint g1 = b1 - (m11 * q1 + m12 * q2);
  const PixelPoint g2 = b2 - (m12 * q1 + m22 * q2);
  const PixelPoint step = (1.0 / trace) * (u1 * g1 + u2 * g2);
  const PixelPoint p1 = q1 + u1 * step;
  const PixelPoint p2 = q2 + u2 * step;
  if (!std::isfinite(p1.x + p1.y + p2.x + p2.y)) {
    throw DegenerateSystem("least-squares solution is not finite");
  }
  return {p0, p1, p2, p3};
}

namespace {

// Total absolute turning angle along the polyline, skipping repeated points.
double polyline_turning(const std::vector<PixelPoint>& pts) {
  double total = 0;
  std::optional<PixelPoint> prev_dir;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const PixelPoint d = pts[i] - pts[i - 1];
    if (std::hypot(d.x, d.y) < 1e-12) continue;
    if (prev_dir) {
      const double cross = prev_dir->x * d.y - prev_dir->y * d.x;
      const double dot = prev_dir->x * d.x + prev_dir->y * d.y;
      total += std::abs(std::atan2(cross, dot));
    }
    prev_dir = d;
  }
  return total;
}

}  // namespace

PathPrimitive fit_run(const SampleRun& run) {
  const std::size_t n = run.points.size();
  if (n < 3) throw std::invalid_argument("fit_run needs >= 3 samples");
  // Enough windows to keep each at <= kMaxSamplesPerWindow samples and to
  // give each cubic at most a quarter turn, while every window keeps at
  // least one interior sample.
  std::size_t windows = (n - 1 + kMaxSamplesPerWindow - 2) / (kMaxSamplesPerWindow - 1);
  const auto quarter_turns = static_cast<std::size_t>(std::ceil(polyline_turning(run.points) / (std::numbers::pi / 2) - 1e-9));
  windows = std::max(windows, std::min(quarter_turns, (n - 1) / 2));
  CubicChain chain;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t end = (w + 1 == windows) ? n - 1 : ((n - 1) * (w + 1)) / windows;
    const std::size_t count = end - begin + 1;
    std::span<const PixelPoint> pts(run.points.data() + begin, count);
    const std::vector<double> ts =
        rescale_unit(std::span<const double>(run.ts.data() + begin, count));
    if (count < 3) {
      chain.segments.push_back({pts.front(), pts.front() + (1.0 / 3.0) * (pts.back() - pts.front()),
                                pts.front() + (2.0 / 3.0) * (pts.back() - pts.front()),
                                pts.back()});
    } else {
      try {
        chain.segments.push_back(fit_cubic(pts, ts));
      } catch (const DegenerateSystem&) {
        return Polyline{run.points};
      }
    }
    begin = end;
  }
  return chain;
}

double default_dot_radius(int image_width) { return 4.0 * image_width / 1000.0; }

std::vector<PathPrimitive> stroke_to_primitives(const Stroke& stroke,
                                                const CoordinateFrame& frame,
                                                int image_width, int image_height) {
  std::vector<PixelPoint> pixels;
  pixels.reserve(stroke.points.size());
  for (const GridRef& ref : stroke.points) {
    pixels.push_back(pixel_of(clamp_to_frame(ref, frame), frame, image_width, image_height));
  }
  std::vector<PathPrimitive> out;
  if (pixels.empty()) return out;
  if (pixels.size() == 1) {
    out.push_back(Dot{pixels.front(), default_dot_radius(image_width)});
    return out;
  }
  if (pixels.size() == 2) {
    out.push_back(Line{pixels[0], pixels[1]});
    return out;
  }
  std::vector<double> ts = stroke.t_values;
  ts.resize(pixels.size(), ts.empty() ? 0.0 : ts.back());
  for (const SampleRun& run : split_corners(pixels, ts)) {
    if (run.points.size() == 1) continue;
    if (run.points.size() == 2) {
      out.push_back(Line{run.points[0], run.points[1]});
    } else {
      out.push_back(fit_run(run));
    }
  }
  if (out.empty()) out.push_back(Dot{pixels.front(), default_dot_radius(image_width)});
  return out;
}

std::vector<PixelPoint> flatten(const PathPrimitive& prim, int samples_per_cubic) {
  return std::visit(
      [&](const auto& p) -> std::vector<PixelPoint> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Dot>) {
          return {p.center};
        } else if constexpr (std::is_same_v<T, Line>) {
          return {p.a, p.b};
        } else if constexpr (std::is_same_v<T, CubicChain>) {
          std::vector<PixelPoint> out{p.segments.front().p0};
          for (const auto& seg : p.segments) {
            for (int i = 1; i <= samples_per_cubic; ++i) {
              out.push_back(seg.eval(static_cast<double>(i) / samples_per_cubic));
            }
          }
          return out;
        } else {
          return p.points;
        }
      },
      prim);
}

}  // namespace sketchvlm
