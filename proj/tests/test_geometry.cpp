#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sketchvlm/coords.hpp"
#include "sketchvlm/geometry.hpp"
#include "sketchvlm/random.hpp"
#include "support.hpp"

using namespace sketchvlm;

namespace {

// Bernstein evaluation written out longhand, independent of CubicBezier::eval.
PixelPoint bezier_at(const std::array<PixelPoint, 4>& c, double t) {
  const double u = 1 - t;
  const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
  return {b0 * c[0].x + b1 * c[1].x + b2 * c[2].x + b3 * c[3].x,
          b0 * c[0].y + b1 * c[1].y + b2 * c[2].y + b3 * c[3].y};
}

double perpendicular(PixelPoint p, PixelPoint a, PixelPoint b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  return std::abs((p.x - a.x) * dy - (p.y - a.y) * dx) / std::hypot(dx, dy);
}

template <class T>
const T& as(const PathPrimitive& p) {
  REQUIRE(std::holds_alternative<T>(p));
  return std::get<T>(p);
}

}  // namespace

TEST_CASE("fit recovers the generating control points") {
  const std::array<PixelPoint, 4> c{{{0, 0}, {100, 200}, {300, 200}, {400, 0}}};
  std::vector<PixelPoint> pts;
  const std::vector<double> ts{0, 0.25, 0.5, 0.75, 1};
  for (double t : ts) pts.push_back(bezier_at(c, t));
  const auto fit = fit_cubic(pts, ts);
  CHECK(distance(fit.p1, c[1]) < 1e-6);
  CHECK(distance(fit.p2, c[2]) < 1e-6);
  CHECK(fit.p0 == c[0]);
  CHECK(fit.p3 == c[3]);
}

TEST_CASE("collinear samples give collinear control points") {
  const std::vector<PixelPoint> pts{{0, 0}, {5, 0}, {10, 0}};
  const auto fit = fit_cubic(pts, std::vector<double>{0, 0.5, 1});
  for (auto p : {fit.p0, fit.p1, fit.p2, fit.p3}) {
    CHECK(std::abs(p.y) < 1e-9);
    CHECK(p.x >= -1e-9);
    CHECK(p.x <= 10 + 1e-9);
  }
}

TEST_CASE("fitted controls are a least-squares minimum") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.integer(4, 9));
    std::vector<PixelPoint> pts;
    std::vector<double> ts;
    for (int i = 0; i < n; ++i) {
      ts.push_back(static_cast<double>(i) / (n - 1));
      pts.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
    }
    const auto fit = fit_cubic(pts, ts);
    const double base = residual_sum_squares(fit, pts, ts);
    const double delta = 1e-3;
    for (int which = 0; which < 2; ++which)
      for (auto d : {PixelPoint{delta, 0}, PixelPoint{-delta, 0}, PixelPoint{0, delta}, PixelPoint{0, -delta}}) {
        auto moved = fit;
        (which == 0 ? moved.p1 : moved.p2) = (which == 0 ? moved.p1 : moved.p2) + d;
        CHECK(residual_sum_squares(moved, pts, ts) >= base);
      }
  }
}

TEST_CASE("all interior samples at one t") {
  const std::vector<PixelPoint> pts{{0, 0}, {3, 3}, {3, 3}, {10, 0}};
  const auto fit = fit_cubic(pts, std::vector<double>{0, 0.5, 0.5, 1});
  CHECK(distance(fit.eval(0.5), {3, 3}) < 1e-9);
  const std::vector<PixelPoint> stuck{{0, 0}, {0, 0}, {1, 1}};
  CHECK_THROWS_AS(fit_cubic(stuck, std::vector<double>{0, 0, 1}), DegenerateSystem);
  const std::vector<PixelPoint> two{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(fit_cubic(two, std::vector<double>{0, 1}), std::invalid_argument);
}

TEST_CASE("corner splitting: upside-down V") {
  const std::vector<PixelPoint> pts{{13, 27}, {18, 37}, {18, 37}, {24, 27}};
  const auto runs = split_corners(pts, std::vector<double>{0, 0.5, 0.5, 1});
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].points == std::vector<PixelPoint>{{13, 27}, {18, 37}});
  CHECK(runs[1].points == std::vector<PixelPoint>{{18, 37}, {24, 27}});
  CHECK(runs[0].ts == std::vector<double>{0, 1});
  CHECK(runs[1].ts == std::vector<double>{0, 1});
}

TEST_CASE("corner splitting: smooth input is one run") {
  const std::vector<PixelPoint> pts{{0, 0}, {1, 2}, {3, 3}, {6, 2}};
  const std::vector<double> ts{0, 0.3, 0.6, 1};
  const auto runs = split_corners(pts, ts);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].points == pts);
  CHECK(runs[0].ts == ts);
}

TEST_CASE("corner splitting: rectangle with doubled corners") {
  const std::vector<PixelPoint> pts{{10, 10}, {30, 10}, {30, 10}, {30, 20}, {30, 20}, {10, 20}, {10, 20}, {10, 10}};
  const std::vector<double> ts{0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1};
  const auto runs = split_corners(pts, ts);
  REQUIRE(runs.size() == 4);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    CHECK(runs[i].points.size() == 2);
    CHECK(runs[i].points.back() == runs[(i + 1) % 4].points.front());
  }
}

TEST_CASE("property: corner split conserves samples") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PixelPoint> pts;
    std::vector<double> ts;
    int corners = 0;
    const int n = static_cast<int>(rng.integer(2, 14));
    for (int i = 0; i < n; ++i) {
      PixelPoint p;
      do {
        p = {static_cast<double>(rng.integer(0, 50)), static_cast<double>(rng.integer(0, 50))};
      } while (!pts.empty() && p == pts.back());
      pts.push_back(p);
      ts.push_back(static_cast<double>(i) / (n - 1));
      if (i > 0 && i + 1 < n && rng.integer(0, 3) == 0) {
        pts.push_back(p);
        ts.push_back(ts.back());
        ++corners;
      }
    }
    const auto runs = split_corners(pts, ts);
    std::size_t total = 0;
    std::vector<PixelPoint> rebuilt;
    for (const auto& r : runs) {
      total += r.points.size();
      for (std::size_t k = 0; k < r.points.size(); ++k)
        if (rebuilt.empty() || k > 0) rebuilt.push_back(r.points[k]);
      CHECK(r.ts.front() == 0.0);
      if (r.ts.size() > 1) CHECK(r.ts.back() == 1.0);
    }
    CHECK(runs.size() == static_cast<std::size_t>(corners) + 1);
    // The input carries each corner twice: undoubled count + corners.
    CHECK(total == (pts.size() - corners) + corners);
    std::vector<PixelPoint> expected;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i == 0 || !(pts[i] == pts[i - 1])) expected.push_back(pts[i]);
    CHECK(rebuilt == expected);
  }
}

TEST_CASE("stroke primitives: line, dot, corner pair") {
  const auto frame = CoordinateFrame::grid(50, 50);
  Stroke line{"l", {{18, 31}, {35, 14}}, {0, 1}, std::nullopt};
  auto prims = stroke_to_primitives(line, frame, 1000, 1000);
  REQUIRE(prims.size() == 1);
  as<Line>(prims[0]);

  Stroke dot{"d", {{15, 31}}, {0}, std::nullopt};
  prims = stroke_to_primitives(dot, frame, 1000, 1000);
  REQUIRE(prims.size() == 1);
  CHECK(as<Dot>(prims[0]).radius == doctest::Approx(4.0));

  const auto set = parse_annotation(testing::kBallDropReply);
  const auto norm = CoordinateFrame::normalized(1000);
  prims = stroke_to_primitives(set.strokes[0], norm, 1000, 1000);
  REQUIRE(prims.size() == 2);
  const auto& a = as<Line>(prims[0]);
  const auto& b = as<Line>(prims[1]);
  CHECK(a.b == PixelPoint{500, 270});
  CHECK(b.a == PixelPoint{500, 270});
  CHECK(a.a == PixelPoint{500, 100});
  CHECK(b.b == PixelPoint{350, 400});
}

TEST_CASE("large circle is followed within 2% of the radius") {
  // Nine samples round a circle, t in steps of 0.125, first and last equal.
  const auto frame = CoordinateFrame::normalized(1000);
  const PixelPoint c{500, 500};
  const double r = 300;
  Stroke s{"circle", {}, {}, std::nullopt};
  for (int i = 0; i <= 8; ++i) {
    const double a = 2 * std::numbers::pi * i / 8;
    s.points.push_back({static_cast<int>(std::lround(c.x + r * std::cos(a))),
                        static_cast<int>(std::lround(c.y + r * std::sin(a)))});
    s.t_values.push_back(i * 0.125);
  }
  const auto prims = stroke_to_primitives(s, frame, 1000, 1000);
  REQUIRE(prims.size() == 1);
  CHECK(std::get<CubicChain>(prims[0]).segments.size() == 4);
  double worst = 0;
  for (const auto& p : prims)
    for (const auto& q : flatten(p, 200)) worst = std::max(worst, std::abs(distance(q, c) - r));
  CHECK(worst < 0.02 * r);
}

TEST_CASE("property: endpoints and chain continuity") {
  Rng rng(17);
  const auto frame = CoordinateFrame::grid(50, 50);
  for (int trial = 0; trial < 300; ++trial) {
    AnnotationSet set = testing::random_annotation(rng, frame);
    for (const auto& s : set.strokes) {
      if (s.is_text()) continue;
      const auto prims = stroke_to_primitives(s, frame, 800, 600);
      REQUIRE_FALSE(prims.empty());
      CHECK(primitive_start(prims.front()) == pixel_of(s.points.front(), frame, 800, 600));
      CHECK(primitive_end(prims.back()) == pixel_of(s.points.back(), frame, 800, 600));
      for (const auto& p : prims)
        if (const auto* chain = std::get_if<CubicChain>(&p))
          for (std::size_t k = 1; k < chain->segments.size(); ++k)
            CHECK(chain->segments[k - 1].p3 == chain->segments[k].p0);
    }
  }
}

TEST_CASE("long strokes are fitted in windows of at most 8 samples") {
  std::vector<PixelPoint> pts;
  std::vector<double> ts;
  for (int i = 0; i < 20; ++i) {
    pts.push_back({i * 10.0, std::sin(i * 0.4) * 50});
    ts.push_back(i / 19.0);
  }
  const auto prim = fit_run({pts, ts});
  const auto& chain = as<CubicChain>(prim);
  CHECK(chain.segments.size() >= 3);
  CHECK(chain.segments.front().p0 == pts.front());
  CHECK(chain.segments.back().p3 == pts.back());
}
