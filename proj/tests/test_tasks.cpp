#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "sketchvlm/metrics.hpp"
#include "sketchvlm/tasks.hpp"
#include "support.hpp"

using namespace sketchvlm;
using sketchvlm::testing::walk_maze;

namespace {

std::vector<PixelPoint> circle(int n, double r = 1) {
  std::vector<PixelPoint> c;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    c.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return c;
}

double polygon_perimeter(const std::vector<PixelPoint>& p) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += distance(p[i], p[(i + 1) % p.size()]);
  return s;
}

// Arc length of each point along the closed polygon, measured from vertex 0.
double arc_position(const std::vector<PixelPoint>& poly, PixelPoint q) {
  double best = 1e18, at = 0, walked = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto a = poly[i], b = poly[(i + 1) % poly.size()];
    const double len = distance(a, b);
    const double t = std::clamp(((q.x - a.x) * (b.x - a.x) + (q.y - a.y) * (b.y - a.y)) / (len * len), 0.0, 1.0);
    const PixelPoint proj = a + t * (b - a);
    const double d = distance(q, proj);
    if (d < best - 1e-9) {
      best = d;
      at = walked + t * len;
    }
    walked += len;
  }
  return at;
}

std::vector<double> arc_gaps(const DotsGT& gt) {
  const double perimeter = polygon_perimeter(gt.contour);
  std::vector<double> gaps;
  for (std::size_t i = 0; i < gt.points.size(); ++i) {
    const double a = arc_position(gt.contour, gt.points[i]);
    const double b = arc_position(gt.contour, gt.points[(i + 1) % gt.points.size()]);
    double g = std::fmod(b - a + perimeter, perimeter);
    if (g > perimeter / 2) g = perimeter - g;  // direction may be reversed
    gaps.push_back(g);
  }
  return gaps;
}

double spacing_cv(const DotsGT& gt) {
  const auto gaps = arc_gaps(gt);
  double mean = 0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double var = 0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  return std::sqrt(var / static_cast<double>(gaps.size())) / mean;
}

BallScene mirrored(const BallScene& s) {
  BallScene m = s;
  m.ball_start.x = s.width - s.ball_start.x;
  for (auto& p : m.platforms) {
    p.a.x = s.width - p.a.x;
    p.b.x = s.width - p.b.x;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& c = s.containers[3 - i];
    m.containers[i] = {s.width - c.x1, c.y0, s.width - c.x0, c.y1};
  }
  return m;
}

}  // namespace

TEST_CASE("random dots are deterministic and well spaced") {
  CHECK(instance_to_json(gen_random_dots(4, 7)) == instance_to_json(gen_random_dots(4, 7)));
  CHECK(instance_to_json(gen_random_dots(4, 7)) != instance_to_json(gen_random_dots(4, 8)));
  DotsOptions opt;
  opt.width = opt.height = 800;
  const auto inst = gen_random_dots(10, 3, opt);
  const auto& gt = std::get<DotsGT>(inst.truth);
  REQUIRE(gt.points.size() == 10);
  for (std::size_t i = 0; i < gt.points.size(); ++i) {
    CHECK(gt.labels[i] == static_cast<int>(i) + 1);
    for (std::size_t j = i + 1; j < gt.points.size(); ++j) CHECK(distance(gt.points[i], gt.points[j]) >= 3 * gt.dot_radius);
    CHECK(gt.points[i].x >= 0);
    CHECK(gt.points[i].x < 800);
  }
  CHECK_THROWS_AS(gen_random_dots(1, 0), std::invalid_argument);
  DotsOptions tiny;
  tiny.width = tiny.height = 90;
  tiny.max_attempts = 200;
  CHECK_THROWS_AS(gen_random_dots(35, 1, tiny), PlacementFailure);
}

TEST_CASE("outline of a circle") {
  const auto inst = gen_outline_dots({circle(360)}, 11);
  const auto& gt = std::get<DotsGT>(inst.truth);
  CHECK(gt.points.size() == 30);
  CHECK(spacing_cv(gt) < 0.02);
  const auto gaps = arc_gaps(gt);
  const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
  CHECK(*hi / *lo < 1.01);
  CHECK(*lo * 30 == doctest::Approx(polygon_perimeter(gt.contour)).epsilon(0.01));
}

TEST_CASE("outline of a rectangle keeps its corners") {
  const std::vector<PixelPoint> rect{{0, 0}, {2, 0}, {2, 1}, {0, 1}};
  const auto inst = gen_outline_dots({rect}, 0);
  const auto& gt = std::get<DotsGT>(inst.truth);
  REQUIRE(gt.contour.size() == 4);
  int on_corner = 0;
  for (const auto& corner : gt.contour) {
    double best = 1e18;
    for (const auto& p : gt.points) best = std::min(best, distance(p, corner));
    on_corner += best < 1e-6 ? 1 : 0;
  }
  CHECK(on_corner == 4);
  CHECK(spacing_cv(gt) < 0.02);
}

TEST_CASE("outline rejections") {
  std::vector<PixelPoint> eight;
  for (int i = 0; i < 200; ++i) {
    const double t = 2 * std::numbers::pi * i / 200;
    eight.push_back({std::sin(t), std::sin(t) * std::cos(t)});
  }
  CHECK_THROWS_AS(gen_outline_dots({eight}, 0), SelfIntersecting);
  CHECK_THROWS_AS(gen_outline_dots({{{0, 0}, {1, 1}}}, 0), DegenerateContour);
  CHECK_THROWS_AS(gen_outline_dots({{{0, 0}, {0, 0}, {0, 0}}}, 0), DegenerateContour);
}

TEST_CASE("outline uses the longest contour and the seed picks the start") {
  const auto big = circle(100, 5), small = circle(50, 1);
  const auto a = gen_outline_dots({small, big}, 1);
  const auto b = gen_outline_dots({big}, 1);
  CHECK(std::get<DotsGT>(a.truth).points == std::get<DotsGT>(b.truth).points);
  std::set<std::pair<long, long>> starts;
  for (std::uint64_t s = 0; s < 8; ++s) {
    const auto p = std::get<DotsGT>(gen_outline_dots({big}, s).truth).points[0];
    starts.insert({std::lround(p.x), std::lround(p.y)});
  }
  CHECK(starts.size() > 1);
}

TEST_CASE("douglas-peucker and resampling") {
  const std::vector<PixelPoint> line{{0, 0}, {1, 0.001}, {2, 0}, {3, 5}};
  const auto s = douglas_peucker(line, 0.01);
  CHECK(s == std::vector<PixelPoint>{{0, 0}, {2, 0}, {3, 5}});
  const auto r = resample_closed({{0, 0}, {4, 0}, {4, 4}, {0, 4}}, 8);
  REQUIRE(r.size() == 8);
  CHECK(r[1] == PixelPoint{2, 0});
  CHECK(r[2] == PixelPoint{4, 0});
  CHECK(closed_polygon_self_intersects({{0, 0}, {2, 2}, {2, 0}, {0, 2}}));
  CHECK_FALSE(closed_polygon_self_intersects({{0, 0}, {2, 0}, {2, 2}, {0, 2}}));
}

TEST_CASE("maze pairs over 200 seeds") {
  std::set<std::size_t> lengths;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto pair = gen_maze(seed);
    const auto& v = std::get<MazeGT>(pair.valid.truth);
    const auto& inv = std::get<MazeGT>(pair.invalid.truth);
    CHECK(v.valid);
    CHECK_FALSE(inv.valid);
    CHECK(v.path.size() >= 3);
    CHECK(v.path.size() <= 8);
    lengths.insert(v.path.size());
    // Independent walker agrees with the labels.
    const auto end = walk_maze(v, v.path);
    REQUIRE(end);
    CHECK(*end == v.end);
    const auto bad = walk_maze(inv, inv.path);
    CHECK((!bad || !(*bad == inv.end)));
    // Exactly one token differs.
    REQUIRE(inv.path.size() == v.path.size());
    int diff = 0;
    for (std::size_t i = 0; i < v.path.size(); ++i) diff += v.path[i] != inv.path[i] ? 1 : 0;
    CHECK(diff == 1);
    CHECK(v.walls == inv.walls);
    CHECK(pair.valid.image == pair.invalid.image);
    CHECK(pair.valid.answer == "Yes");
    CHECK(pair.invalid.answer == "No");

    // Walls are consistent from both sides and form a spanning tree.
    int open = 0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (c + 1 < 3) {
          CHECK(v.wall({r, c}, Direction::Right) == v.wall({r, c + 1}, Direction::Left));
          open += v.wall({r, c}, Direction::Right) ? 0 : 1;
        }
        if (r + 1 < 3) {
          CHECK(v.wall({r, c}, Direction::Down) == v.wall({r + 1, c}, Direction::Up));
          open += v.wall({r, c}, Direction::Down) ? 0 : 1;
        }
      }
    CHECK(open == 8);
    CHECK(maze_tree_path(v, v.start, v.end).size() == v.path.size() + 1);
  }
  CHECK(lengths.size() >= 4);
}

TEST_CASE("maze generation and render are deterministic") {
  const auto a = gen_maze(42), b = gen_maze(42);
  CHECK(instance_to_json(a.valid) == instance_to_json(b.valid));
  CHECK(render_task_image(a.valid) == render_task_image(b.valid));
  CHECK(a.valid.question.find(to_string(std::get<MazeGT>(a.valid.truth).path[0])) != std::string::npos);
}

TEST_CASE("free fall lands straight down") {
  auto scene = default_ball_scene();
  scene.ball_start = {scene.containers[1].center().x, 40};
  const auto sim = simulate_ball(scene);
  CHECK(sim.container == 2);
  CHECK_FALSE(sim.touched_platform);
  REQUIRE_FALSE(sim.trajectory.empty());
  CHECK(sim.trajectory.front() == scene.ball_start);
  for (const auto& p : sim.trajectory) CHECK(p.x == doctest::Approx(scene.ball_start.x).epsilon(1e-12));
}

TEST_CASE("free fall matches the closed form before impact") {
  auto scene = default_ball_scene();
  scene.ball_start = {scene.containers[2].center().x, 40};
  PhysicsConfig cfg;
  cfg.sample_every = 1;
  const auto sim = simulate_ball(scene, cfg);
  // Semi-implicit Euler: y_n = y0 + g dt^2 n(n+1)/2.
  for (std::size_t n = 1; n < 40; ++n) {
    const double expect = 40 + cfg.gravity * cfg.dt * cfg.dt * static_cast<double>(n * (n + 1)) / 2;
    CHECK(sim.trajectory[n].y == doctest::Approx(expect));
  }
}

TEST_CASE("mirror-symmetric scenes give mirrored results") {
  auto scene = default_ball_scene();
  scene.ball_start = {330, 40};
  scene.platforms.push_back({{250, 200}, {420, 280}});
  const auto a = simulate_ball(scene);
  const auto b = simulate_ball(mirrored(scene));
  CHECK(a.touched_platform);
  CHECK(b.container == 5 - a.container);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(b.trajectory[i].x == doctest::Approx(scene.width - a.trajectory[i].x).epsilon(1e-6));
    CHECK(b.trajectory[i].y == doctest::Approx(a.trajectory[i].y).epsilon(1e-6));
  }
}

TEST_CASE("a 30 degree platform agrees with a fine-step reference") {
  auto scene = default_ball_scene();
  scene.ball_start = {300, 40};
  const double len = 200, angle = 30 * std::numbers::pi / 180;
  const PixelPoint mid{300, 250};
  scene.platforms.push_back({{mid.x - len / 2 * std::cos(angle), mid.y - len / 2 * std::sin(angle)},
                             {mid.x + len / 2 * std::cos(angle), mid.y + len / 2 * std::sin(angle)}});
  const auto coarse = simulate_ball(scene);
  PhysicsConfig fine;
  fine.dt /= 100;
  fine.sample_every = 400;
  const auto reference = simulate_ball(scene, fine);
  CHECK(coarse.touched_platform);
  CHECK(coarse.container == reference.container);
  CHECK(coarse.container > 1);  // slides right, down the slope
}

TEST_CASE("a ball that never lands raises NoLanding") {
  auto scene = default_ball_scene();
  // A flat shelf holds the ball forever.
  scene.ball_start = {300, 40};
  scene.platforms.push_back({{200, 200}, {400, 200}});
  CHECK_THROWS_AS(simulate_ball(scene), NoLanding);
}

TEST_CASE("ball drop batch: stratified, anchored, stable") {
  const auto batch = gen_ball_drop_batch(198, 0);
  REQUIRE(batch.size() == 198);
  std::map<std::size_t, int> lines;
  std::set<int> containers;
  PhysicsConfig half;
  half.dt /= 2;
  for (const auto& inst : batch) {
    const auto& gt = std::get<BallGT>(inst.truth);
    ++lines[gt.scene.platforms.size()];
    containers.insert(gt.container);
    CHECK(gt.trajectory.front() == gt.scene.ball_start);
    CHECK(inst.answer == std::to_string(gt.container));
    CHECK(simulate_ball(gt.scene, half).container == gt.container);
  }
  CHECK(lines[1] == 66);
  CHECK(lines[2] == 66);
  CHECK(lines[3] == 66);
  CHECK(containers.size() == 4);
  CHECK(instance_to_json(gen_ball_drop(5, 2)) == instance_to_json(gen_ball_drop(5, 2)));
}

TEST_CASE("manifests") {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "images");
  write_png(RasterImage(100, 80), dir / "images/a.png");

  std::vector<TaskInstance> insts;
  for (int i = 0; i < 2; ++i) {
    TaskInstance t;
    t.id = "count-" + std::to_string(i);
    t.kind = TaskKind::Counting;
    t.image = "images/a.png";
    t.width = 100;
    t.height = 80;
    t.question = "How many apples?";
    t.answer = "2";
    t.truth = CountGT{"apples", {{1, 1, 10, 10}, {20, 20, 40, 40}}};
    insts.push_back(t);
  }
  save_manifest(dir / "manifest.json", insts);
  const auto loaded = load_manifest(dir / "manifest.json");
  REQUIRE(loaded.size() == 2);
  CHECK(std::get<CountGT>(loaded[1].truth).boxes.size() == 2);
  CHECK(std::get<CountGT>(loaded[1].truth).boxes[1] == PixelRect{20, 20, 40, 40});
  CHECK(std::holds_alternative<CountingTask>(loaded[0].task_prompt()));

  auto doc = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  doc["schema_version"] = 99;
  std::ofstream(dir / "v99.json") << doc.dump();
  CHECK_THROWS_AS(load_manifest(dir / "v99.json"), SchemaError);

  doc["schema_version"] = 1;
  doc["instances"][1]["id"] = "count-0";
  std::ofstream(dir / "dup.json") << doc.dump();
  CHECK_THROWS_AS(load_manifest(dir / "dup.json"), SchemaError);

  doc["instances"][1]["id"] = "count-1";
  doc["instances"][1]["image"] = "images/missing.png";
  std::ofstream(dir / "missing.json") << doc.dump();
  CHECK_THROWS_AS(load_manifest(dir / "missing.json"), MissingFile);
}

TEST_CASE("ground truth json round-trips for every generated kind") {
  std::vector<TaskInstance> all{gen_random_dots(6, 1), gen_outline_dots({circle(60)}, 2), gen_maze(3).invalid,
                                gen_ball_drop(4, 3)};
  for (const auto& inst : all) {
    const auto j = instance_to_json(inst);
    CHECK(instance_to_json(instance_from_json(j)) == j);
  }
  TaskInstance wrong = gen_random_dots(4, 1);
  wrong.kind = TaskKind::Maze;
  CHECK_THROWS_AS(wrong.check(), std::invalid_argument);
}

TEST_CASE("size buckets") {
  CHECK(size_bucket({0, 0, 31, 33}) == SizeBucket::Small);
  CHECK(size_bucket({0, 0, 32, 32}) == SizeBucket::Medium);
  CHECK(size_bucket({0, 0, 96, 96}) == SizeBucket::Large);
}

TEST_CASE("rendered task images have the instance size") {
  for (const auto& inst : {gen_random_dots(5, 9), gen_maze(9).valid, gen_ball_drop(9, 1)}) {
    const auto img = render_task_image(inst);
    CHECK(img.width() == inst.width);
    CHECK(img.height() == inst.height);
  }
}
