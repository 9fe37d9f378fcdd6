#pragma once

// Benchmark task instances: synthetic generators (connect-the-dots, mazes,
// ball drops), their renders, ground truth, and JSON manifests for external
// datasets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sketchvlm/geometry.hpp"
#include "sketchvlm/prompts.hpp"
#include "sketchvlm/raster.hpp"

namespace sketchvlm {

struct PixelRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(PixelPoint p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  PixelPoint center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Even-odd test; points on the boundary may land either way.
bool point_in_polygon(PixelPoint p, const std::vector<PixelPoint>& polygon);

/// A point inside the polygon: the vertex centroid when it is inside,
/// otherwise the interior sample farthest from the boundary.
PixelPoint interior_point(const std::vector<PixelPoint>& polygon);

enum class TaskKind { ConnectDots, Maze, BallDrop, Counting, Shapes, PartLabel, FreeVQA };
std::string to_string(TaskKind kind);
/// Throws std::invalid_argument for unknown names.
TaskKind task_kind_from_string(const std::string& name);

struct DotsGT {
  std::vector<PixelPoint> points;  // in connection order
  std::vector<int> labels;         // 1..n
  std::vector<PixelPoint> label_anchors;  // label text centres
  double dot_radius = 6;
  std::vector<PixelPoint> contour;  // simplified outline; empty for random dots
};

enum class Direction { Up, Down, Left, Right };
std::string to_string(Direction d);
Direction direction_from_string(const std::string& name);

struct MazeCell {
  int row = 0;  // 0 is the top row
  int col = 0;
  friend bool operator==(const MazeCell&, const MazeCell&) = default;
};

struct MazeGT {
  int rows = 3;
  int cols = 3;
  /// Per cell (row-major): bit d set when there is a wall on side d, with
  /// bits indexed by Direction. The outer boundary is always walled.
  std::vector<std::uint8_t> walls;
  MazeCell start;
  MazeCell end;
  std::vector<Direction> path;
  bool valid = true;

  bool wall(MazeCell c, Direction d) const;
};

struct Segment {
  PixelPoint a, b;
};

struct BallScene {
  int width = 800;
  int height = 600;
  PixelPoint ball_start;
  double ball_radius = 10;
  std::vector<Segment> platforms;
  std::array<PixelRect, 4> containers;  // left to right

  /// Container walls as segments (left, bottom, right of each box).
  std::vector<Segment> container_walls() const;
};

struct BallGT {
  BallScene scene;
  std::vector<PixelPoint> trajectory;
  int container = 0;  // 1..4
};

struct CountGT {
  std::string object;
  std::vector<PixelRect> boxes;
};

enum class SizeBucket { Small, Medium, Large };
std::string to_string(SizeBucket b);
/// COCO area thresholds: < 32^2 small, < 96^2 medium, otherwise large.
SizeBucket size_bucket(const PixelRect& box);

struct ShapesGT {
  std::map<std::string, std::vector<PixelRect>> boxes;  // per class
};

struct LabelGT {
  std::string concept_name;
  std::map<std::string, std::vector<PixelPoint>> parts;  // name -> polygon
};

struct AnswerGT {};

using GroundTruth = std::variant<DotsGT, MazeGT, BallGT, CountGT, ShapesGT, LabelGT, AnswerGT>;

struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::FreeVQA;
  std::string image;  // path relative to the manifest directory
  int width = 0;
  int height = 0;
  std::string question;
  std::optional<std::string> answer;
  GroundTruth truth = AnswerGT{};

  /// Prompt variant the session engine sends for this instance.
  TaskPrompt task_prompt() const;
  /// Throws std::invalid_argument when `truth` does not match `kind`.
  void check() const;
};

class PlacementFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DegenerateContour : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SelfIntersecting : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NoLanding : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Connect-the-dots.

struct DotsOptions {
  int width = 1000;
  int height = 1000;
  double dot_radius = 6;
  int max_attempts = 20000;
};

/// n numbered dots at integer pixel centres, pairwise at least 3 radii apart.
TaskInstance gen_random_dots(int n, std::uint64_t seed, const DotsOptions& options = {});

/// Douglas-Peucker simplification of an open polyline.
std::vector<PixelPoint> douglas_peucker(const std::vector<PixelPoint>& points, double tolerance);

/// `count` points at equal arc length along the closed polygon, starting at
/// its first vertex.
std::vector<PixelPoint> resample_closed(const std::vector<PixelPoint>& polygon, int count);

/// True when two non-adjacent edges of the closed polygon intersect.
bool closed_polygon_self_intersects(const std::vector<PixelPoint>& polygon);

inline constexpr int kOutlineDots = 30;
/// Relative to the contour's bounding-box diagonal.
inline constexpr double kSimplifyTolerance = 0.005;

/// Outline dots from the longest closed contour: simplify, fit into the
/// image keeping aspect ratio, resample to 30 dots. The seed picks the
/// starting vertex and direction.
TaskInstance gen_outline_dots(const std::vector<std::vector<PixelPoint>>& contours,
                              std::uint64_t seed, const DotsOptions& options = {});

// Mazes.

struct MazePair {
  TaskInstance valid;
  TaskInstance invalid;
};

MazePair gen_maze(std::uint64_t seed);

/// Pixel centre of a maze cell in the rendered image.
PixelPoint maze_cell_center(const MazeGT& maze, MazeCell cell, int width, int height);

/// Cells on the unique tree path between two cells, inclusive.
std::vector<MazeCell> maze_tree_path(const MazeGT& maze, MazeCell from, MazeCell to);

// Ball drop.

struct PhysicsConfig {
  double gravity = 1000;     // px/s^2, +y is down
  double restitution = 0.35;
  double friction = 0.2;     // tangential impulse per unit normal impulse
  double dt = 1.0 / 240;
  double t_max = 20;
  double settle_speed = 2;   // px/s
  int sample_every = 4;      // steps between trajectory samples
};

struct Simulation {
  std::vector<PixelPoint> trajectory;
  int container = 0;  // 1..4
  bool touched_platform = false;
  double time = 0;
};

/// Throws NoLanding if the ball is not at rest inside a container by t_max.
Simulation simulate_ball(const BallScene& scene, const PhysicsConfig& config = {});

/// Container row used by every generated scene.
BallScene default_ball_scene(int width = 800, int height = 600);

TaskInstance gen_ball_drop(std::uint64_t seed, int n_lines, const PhysicsConfig& config = {});

/// Instance i uses n_lines = 1 + i % 3 and seed derive_seed(seed, i).
std::vector<TaskInstance> gen_ball_drop_batch(int count, std::uint64_t seed,
                                              const PhysicsConfig& config = {});

// Rendering and manifests.

/// Deterministic render of a generated task (dots, maze, ball drop).
/// Throws std::invalid_argument for kinds that only come from files.
RasterImage render_task_image(const TaskInstance& instance);

inline constexpr int kManifestSchemaVersion = 1;

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(TaskKind kind, const nlohmann::json& j);
nlohmann::json instance_to_json(const TaskInstance& instance);
TaskInstance instance_from_json(const nlohmann::json& j);

/// Loads a manifest and checks that ids are unique and images exist.
std::vector<TaskInstance> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<TaskInstance>& instances);

/// Ground-truth annotation an ideal model would draw for `instance`.
AnnotationSet reference_annotation(const TaskInstance& instance, const CoordinateFrame& frame);

}  // namespace sketchvlm
