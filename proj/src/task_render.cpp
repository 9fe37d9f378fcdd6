#include <cmath>
#include <string>

#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

namespace {

const Rgba kBlack{0, 0, 0, 255};
const Rgba kGray{150, 150, 150, 255};
const Rgba kGreen{40, 170, 60, 255};
const Rgba kRed{220, 30, 30, 255};

struct MazeBox {
  double x0, y0, cell;
};

MazeBox maze_box(const MazeGT& maze, int width, int height) {
  const double margin = 0.1 * std::min(width, height);
  const double cell = std::min((width - 2 * margin) / maze.cols, (height - 2 * margin) / maze.rows);
  return {(width - cell * maze.cols) / 2, (height - cell * maze.rows) / 2, cell};
}

void centered_text(CoverageMask& mask, PixelPoint center, const std::string& text, int scale) {
  const auto ext = text_extent(text, scale);
  mask.draw_text(std::round(center.x - ext.width / 2.0), std::round(center.y - ext.height / 2.0), text, scale);
}

void dashed(CoverageMask& mask, PixelPoint a, PixelPoint b, double width) {
  const double len = distance(a, b);
  const double dash = 10, gap = 8;
  for (double s = 0; s < len; s += dash + gap) {
    const double e = std::min(len, s + dash);
    mask.stroke_segment(a + (s / len) * (b - a), a + (e / len) * (b - a), width);
  }
}

RasterImage render_dots(const TaskInstance& inst, const DotsGT& gt) {
  RasterImage img(inst.width, inst.height);
  CoverageMask dots(inst.width, inst.height);
  for (const auto& p : gt.points) dots.fill_disc(p, gt.dot_radius);
  const int scale = std::max(1, static_cast<int>(std::lround(inst.height / 500.0)));
  for (std::size_t i = 0; i < gt.labels.size(); ++i)
    centered_text(dots, gt.label_anchors[i], std::to_string(gt.labels[i]), scale);
  blend_mask(img, dots, kBlack);
  return img;
}

RasterImage render_maze(const TaskInstance& inst, const MazeGT& gt) {
  RasterImage img(inst.width, inst.height);
  const auto box = maze_box(gt, inst.width, inst.height);
  const double wall_w = std::max(3.0, box.cell / 26);

  auto fill_cell = [&](MazeCell c, Rgba color) {
    CoverageMask m(inst.width, inst.height);
    const double inset = box.cell * 0.25;
    m.fill_rect(box.x0 + c.col * box.cell + inset, box.y0 + c.row * box.cell + inset,
                box.x0 + (c.col + 1) * box.cell - inset, box.y0 + (c.row + 1) * box.cell - inset);
    blend_mask(img, m, color);
  };
  fill_cell(gt.start, kGreen);
  fill_cell(gt.end, kRed);

  CoverageMask walls(inst.width, inst.height), open(inst.width, inst.height);
  auto corner = [&](int row, int col) { return PixelPoint{box.x0 + col * box.cell, box.y0 + row * box.cell}; };
  for (int r = 0; r < gt.rows; ++r) {
    for (int c = 0; c < gt.cols; ++c) {
      MazeCell cell{r, c};
      // Each cell owns its top and left edges; the last row/column also own bottom/right.
      auto edge = [&](Direction d, PixelPoint a, PixelPoint b) {
        if (gt.wall(cell, d)) walls.stroke_segment(a, b, wall_w);
        else dashed(open, a, b, 2);
      };
      edge(Direction::Up, corner(r, c), corner(r, c + 1));
      edge(Direction::Left, corner(r, c), corner(r + 1, c));
      if (r == gt.rows - 1) edge(Direction::Down, corner(r + 1, c), corner(r + 1, c + 1));
      if (c == gt.cols - 1) edge(Direction::Right, corner(r, c + 1), corner(r + 1, c + 1));
    }
  }
  blend_mask(img, open, kGray);
  blend_mask(img, walls, kBlack);
  return img;
}

RasterImage render_ball(const TaskInstance& inst, const BallGT& gt) {
  RasterImage img(inst.width, inst.height);
  CoverageMask lines(inst.width, inst.height);
  for (const auto& s : gt.scene.platforms) lines.stroke_segment(s.a, s.b, 5);
  for (const auto& s : gt.scene.container_walls()) lines.stroke_segment(s.a, s.b, 5);
  for (std::size_t i = 0; i < gt.scene.containers.size(); ++i)
    centered_text(lines, gt.scene.containers[i].center(), std::to_string(i + 1), 3);
  blend_mask(img, lines, kBlack);
  CoverageMask ball(inst.width, inst.height);
  ball.fill_disc(gt.scene.ball_start, gt.scene.ball_radius);
  blend_mask(img, ball, kRed);
  return img;
}

}  // namespace

PixelPoint maze_cell_center(const MazeGT& maze, MazeCell cell, int width, int height) {
  const auto box = maze_box(maze, width, height);
  return {box.x0 + (cell.col + 0.5) * box.cell, box.y0 + (cell.row + 0.5) * box.cell};
}

RasterImage render_task_image(const TaskInstance& instance) {
  if (const auto* d = std::get_if<DotsGT>(&instance.truth)) return render_dots(instance, *d);
  if (const auto* m = std::get_if<MazeGT>(&instance.truth)) return render_maze(instance, *m);
  if (const auto* b = std::get_if<BallGT>(&instance.truth)) return render_ball(instance, *b);
  throw std::invalid_argument("render_task_image: " + to_string(instance.kind) + " images come from files");
}

}  // namespace sketchvlm
