#include "sketchvlm/tasks.hpp"

#include <fmt/format.h>

namespace sketchvlm {

namespace {

constexpr std::pair<TaskKind, const char*> kKindNames[] = {
    {TaskKind::ConnectDots, "connect_dots"}, {TaskKind::Maze, "maze"},
    {TaskKind::BallDrop, "ball_drop"},       {TaskKind::Counting, "counting"},
    {TaskKind::Shapes, "shapes"},            {TaskKind::PartLabel, "part_label"},
    {TaskKind::FreeVQA, "free_vqa"},
};

}  // namespace

std::string to_string(TaskKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  throw std::invalid_argument("unknown task kind: " + name);
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

Direction direction_from_string(const std::string& name) {
  if (name == "up") return Direction::Up;
  if (name == "down") return Direction::Down;
  if (name == "left") return Direction::Left;
  if (name == "right") return Direction::Right;
  throw std::invalid_argument("unknown direction: " + name);
}

bool MazeGT::wall(MazeCell c, Direction d) const {
  return (walls.at(static_cast<std::size_t>(c.row * cols + c.col)) >> static_cast<int>(d)) & 1;
}

std::vector<Segment> BallScene::container_walls() const {
  std::vector<Segment> out;
  for (const auto& box : containers) {
    out.push_back({{box.x0, box.y0}, {box.x0, box.y1}});
    out.push_back({{box.x0, box.y1}, {box.x1, box.y1}});
    out.push_back({{box.x1, box.y1}, {box.x1, box.y0}});
  }
  return out;
}

std::string to_string(SizeBucket b) {
  switch (b) {
    case SizeBucket::Small: return "small";
    case SizeBucket::Medium: return "medium";
    case SizeBucket::Large: return "large";
  }
  return "?";
}

SizeBucket size_bucket(const PixelRect& box) {
  const double area = box.area();
  if (area < 32.0 * 32.0) return SizeBucket::Small;
  if (area < 96.0 * 96.0) return SizeBucket::Medium;
  return SizeBucket::Large;
}

TaskPrompt TaskInstance::task_prompt() const {
  if (kind == TaskKind::Counting) return CountingTask{std::get<CountGT>(truth).object};
  if (kind == TaskKind::PartLabel) {
    const auto& gt = std::get<LabelGT>(truth);
    LabelingTask t{gt.concept_name, {}};
    for (const auto& [name, poly] : gt.parts) t.labels_hint.push_back(name);
    return t;
  }
  return FreeQuestion{question};
}

void TaskInstance::check() const {
  bool ok = false;
  switch (kind) {
    case TaskKind::ConnectDots: ok = std::holds_alternative<DotsGT>(truth); break;
    case TaskKind::Maze: ok = std::holds_alternative<MazeGT>(truth); break;
    case TaskKind::BallDrop: ok = std::holds_alternative<BallGT>(truth); break;
    case TaskKind::Counting: ok = std::holds_alternative<CountGT>(truth); break;
    case TaskKind::Shapes: ok = std::holds_alternative<ShapesGT>(truth); break;
    case TaskKind::PartLabel: ok = std::holds_alternative<LabelGT>(truth); break;
    case TaskKind::FreeVQA: ok = std::holds_alternative<AnswerGT>(truth); break;
  }
  if (!ok) throw std::invalid_argument(fmt::format("{}: truth does not match kind {}", id, to_string(kind)));
  if (width <= 0 || height <= 0) throw std::invalid_argument(id + ": image size must be positive");
  if (const auto* maze = std::get_if<MazeGT>(&truth); maze && maze->path.empty())
    throw std::invalid_argument(id + ": maze path is empty");
}

}  // namespace sketchvlm
