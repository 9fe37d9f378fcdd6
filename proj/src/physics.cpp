#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "sketchvlm/random.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

namespace {

struct Collider {
  Segment seg;
  bool platform = false;
};

PixelPoint closest_on_segment(PixelPoint p, const Segment& s) {
  const PixelPoint ab = s.b - s.a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0) return s.a;
  const double t = std::clamp(((p.x - s.a.x) * ab.x + (p.y - s.a.y) * ab.y) / len2, 0.0, 1.0);
  return s.a + t * ab;
}

double dot(PixelPoint a, PixelPoint b) { return a.x * b.x + a.y * b.y; }

int container_at(const BallScene& scene, PixelPoint p) {
  for (std::size_t i = 0; i < scene.containers.size(); ++i) {
    const auto& c = scene.containers[i];
    if (p.x > c.x0 && p.x < c.x1 && p.y > c.y0 && p.y < c.y1) return static_cast<int>(i) + 1;
  }
  return 0;
}

bool segments_cross(const Segment& s, const Segment& t) {
  auto orient = [](PixelPoint a, PixelPoint b, PixelPoint c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  const double d1 = orient(t.a, t.b, s.a), d2 = orient(t.a, t.b, s.b);
  const double d3 = orient(s.a, s.b, t.a), d4 = orient(s.a, s.b, t.b);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_gap(const Segment& s, const Segment& t) {
  if (segments_cross(s, t)) return 0;
  return std::min({distance(s.a, closest_on_segment(s.a, t)), distance(s.b, closest_on_segment(s.b, t)),
                   distance(t.a, closest_on_segment(t.a, s)), distance(t.b, closest_on_segment(t.b, s))});
}

}  // namespace

BallScene default_ball_scene(int width, int height) {
  BallScene scene;
  scene.width = width;
  scene.height = height;
  scene.ball_radius = 10;
  scene.ball_start = {width / 2.0, 40};
  const double side = 20, gap = 10;
  const double box_w = (width - 2 * side - 3 * gap) / 4;
  const double y1 = height - 20, y0 = y1 - 90;
  for (int i = 0; i < 4; ++i) {
    const double x0 = side + i * (box_w + gap);
    scene.containers[static_cast<std::size_t>(i)] = {x0, y0, x0 + box_w, y1};
  }
  return scene;
}

Simulation simulate_ball(const BallScene& scene, const PhysicsConfig& config) {
  if (scene.platforms.size() > 3) throw std::invalid_argument("simulate_ball: at most 3 platforms");
  if (!(config.dt > 0)) throw std::invalid_argument("simulate_ball: dt must be positive");

  std::vector<Collider> colliders;
  for (const auto& p : scene.platforms) colliders.push_back({p, true});
  for (const auto& w : scene.container_walls()) colliders.push_back({w, false});

  const double r = scene.ball_radius;
  const double rest_speed = 2 * config.gravity * config.dt;
  const auto steps = static_cast<long>(std::ceil(config.t_max / config.dt));

  Simulation sim;
  PixelPoint p = scene.ball_start;
  PixelPoint v{0, 0};
  sim.trajectory.push_back(p);

  for (long step = 1; step <= steps; ++step) {
    v.y += config.gravity * config.dt;
    p = p + config.dt * v;

    for (int pass = 0; pass < 4; ++pass) {
      bool any = false;
      for (const auto& c : colliders) {
        const PixelPoint q = closest_on_segment(p, c.seg);
        const PixelPoint d = p - q;
        const double dist = std::hypot(d.x, d.y);
        if (dist >= r) continue;
        PixelPoint n;
        if (dist > 1e-12) {
          n = (1.0 / dist) * d;
        } else {
          const PixelPoint ab = c.seg.b - c.seg.a;
          const double len = std::hypot(ab.x, ab.y);
          n = {-ab.y / len, ab.x / len};
          if (dot(n, v) > 0) n = -1.0 * n;
        }
        p = q + r * n;
        any = true;
        if (c.platform) sim.touched_platform = true;
        const double vn = dot(v, n);
        if (vn >= 0) continue;
        const PixelPoint vt = v - vn * n;
        const double bounce = -vn > rest_speed ? -config.restitution * vn : 0.0;
        const double impulse = bounce - vn;
        const double vt_len = std::hypot(vt.x, vt.y);
        const double scale = vt_len > 0 ? std::max(0.0, vt_len - config.friction * impulse) / vt_len : 0.0;
        v = scale * vt + bounce * n;
      }
      if (!any) break;
    }

    if (step % config.sample_every == 0) sim.trajectory.push_back(p);

    const int box = container_at(scene, p);
    if (box != 0 && std::hypot(v.x, v.y) < config.settle_speed) {
      if (!(sim.trajectory.back() == p)) sim.trajectory.push_back(p);
      sim.container = box;
      sim.time = static_cast<double>(step) * config.dt;
      return sim;
    }
    if (p.y > scene.height + 4 * r || p.x < -4 * r || p.x > scene.width + 4 * r) break;
  }
  throw NoLanding("ball did not come to rest in a container");
}

TaskInstance gen_ball_drop(std::uint64_t seed, int n_lines, const PhysicsConfig& config) {
  if (n_lines < 1 || n_lines > 3) throw std::invalid_argument("gen_ball_drop: n_lines must be 1..3");
  Rng rng(seed);
  PhysicsConfig half = config;
  half.dt = config.dt / 2;

  for (int attempt = 0; attempt < 20000; ++attempt) {
    BallScene scene = default_ball_scene();
    scene.ball_start.x = rng.uniform(60, scene.width - 60);
    const double top = scene.containers[0].y0;

    bool ok = true;
    for (int i = 0; i < n_lines && ok; ++i) {
      const double cx = rng.uniform(100, scene.width - 100);
      const double cy = rng.uniform(130, top - 70);
      const double len = rng.uniform(120, 260);
      double angle = rng.uniform(15, 40) * std::numbers::pi / 180;
      if (rng.coin()) angle = -angle;
      const PixelPoint half_vec{std::cos(angle) * len / 2, std::sin(angle) * len / 2};
      Segment s{{cx - half_vec.x, cy - half_vec.y}, {cx + half_vec.x, cy + half_vec.y}};
      if (std::max(s.a.y, s.b.y) > top - 40 || std::min(s.a.y, s.b.y) < scene.ball_start.y + 40) ok = false;
      for (const auto& other : scene.platforms)
        if (segment_gap(s, other) < 4 * scene.ball_radius) ok = false;
      scene.platforms.push_back(s);
    }
    if (!ok) continue;

    Simulation sim;
    try {
      sim = simulate_ball(scene, config);
      if (!sim.touched_platform) continue;
      if (simulate_ball(scene, half).container != sim.container) continue;
    } catch (const NoLanding&) {
      continue;
    }

    BallGT gt;
    gt.scene = scene;
    gt.trajectory = std::move(sim.trajectory);
    gt.container = sim.container;

    TaskInstance inst;
    inst.id = fmt::format("balldrop-{}-{}", n_lines, seed);
    inst.kind = TaskKind::BallDrop;
    inst.image = inst.id + ".png";
    inst.width = scene.width;
    inst.height = scene.height;
    inst.question = fill_template(prompt_asset("task_ball_drop.txt"), {{"containers", "4"}});
    inst.answer = std::to_string(gt.container);
    inst.truth = std::move(gt);
    return inst;
  }
  throw std::runtime_error(fmt::format("gen_ball_drop: no usable scene for seed {}", seed));
}

std::vector<TaskInstance> gen_ball_drop_batch(int count, std::uint64_t seed, const PhysicsConfig& config) {
  std::vector<TaskInstance> out;
  for (int i = 0; i < count; ++i) {
    auto inst = gen_ball_drop(derive_seed(seed, static_cast<std::uint64_t>(i)), 1 + i % 3, config);
    inst.id = fmt::format("balldrop-{:04d}", i);
    inst.image = inst.id + ".png";
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace sketchvlm
