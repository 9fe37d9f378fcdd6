#include <algorithm>
#include <array>
#include <queue>

#include <fmt/format.h>

#include "sketchvlm/random.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm {

namespace {

constexpr int kMazeSize = 3;
constexpr int kMinPath = 3;
constexpr int kMaxPath = 8;
constexpr std::array<Direction, 4> kDirections = {Direction::Up, Direction::Down, Direction::Left,
                                                   Direction::Right};

MazeCell step_cell(MazeCell c, Direction d) {
  switch (d) {
    case Direction::Up: return {c.row - 1, c.col};
    case Direction::Down: return {c.row + 1, c.col};
    case Direction::Left: return {c.row, c.col - 1};
    case Direction::Right: return {c.row, c.col + 1};
  }
  return c;
}

Direction opposite(Direction d) {
  switch (d) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
  }
  return d;
}

bool inside(const MazeGT& m, MazeCell c) {
  return c.row >= 0 && c.row < m.rows && c.col >= 0 && c.col < m.cols;
}

int index_of(const MazeGT& m, MazeCell c) { return c.row * m.cols + c.col; }

void open_wall(MazeGT& m, MazeCell c, Direction d) {
  m.walls[static_cast<std::size_t>(index_of(m, c))] &= static_cast<std::uint8_t>(~(1u << static_cast<int>(d)));
  MazeCell n = step_cell(c, d);
  m.walls[static_cast<std::size_t>(index_of(m, n))] &=
      static_cast<std::uint8_t>(~(1u << static_cast<int>(opposite(d))));
}

// Wilson's algorithm: loop-erased random walks give a uniform spanning tree.
void carve_uniform_tree(MazeGT& m, Rng& rng) {
  const int n = m.rows * m.cols;
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<int> next_dir(static_cast<std::size_t>(n), -1);
  in_tree[static_cast<std::size_t>(rng.integer(0, n - 1))] = true;
  for (int s = 0; s < n; ++s) {
    if (in_tree[static_cast<std::size_t>(s)]) continue;
    MazeCell c{s / m.cols, s % m.cols};
    while (!in_tree[static_cast<std::size_t>(index_of(m, c))]) {
      Direction d;
      MazeCell nxt;
      do {
        d = kDirections[static_cast<std::size_t>(rng.integer(0, 3))];
        nxt = step_cell(c, d);
      } while (!inside(m, nxt));
      next_dir[static_cast<std::size_t>(index_of(m, c))] = static_cast<int>(d);
      c = nxt;
    }
    c = {s / m.cols, s % m.cols};
    while (!in_tree[static_cast<std::size_t>(index_of(m, c))]) {
      auto d = static_cast<Direction>(next_dir[static_cast<std::size_t>(index_of(m, c))]);
      in_tree[static_cast<std::size_t>(index_of(m, c))] = true;
      open_wall(m, c, d);
      c = step_cell(c, d);
    }
  }
}

std::vector<Direction> directions_along(const std::vector<MazeCell>& cells) {
  std::vector<Direction> out;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    for (Direction d : kDirections)
      if (step_cell(cells[i - 1], d) == cells[i]) out.push_back(d);
  }
  return out;
}

// Follows `path`; false if it leaves the grid or crosses a wall.
bool follows(const MazeGT& m, const std::vector<Direction>& path, MazeCell& at) {
  at = m.start;
  for (Direction d : path) {
    if (m.wall(at, d)) return false;
    at = step_cell(at, d);
    if (!inside(m, at)) return false;
  }
  return true;
}

std::string path_text(const std::vector<Direction>& path) {
  std::vector<std::string> words;
  for (Direction d : path) words.push_back(to_string(d));
  return fmt::format("{}", fmt::join(words, ", "));
}

TaskInstance maze_instance(const MazeGT& gt, std::uint64_t seed) {
  TaskInstance inst;
  inst.id = fmt::format("maze-{}-{}", seed, gt.valid ? "valid" : "invalid");
  inst.kind = TaskKind::Maze;
  inst.image = fmt::format("maze-{}.png", seed);  // both twins share one image
  inst.width = 600;
  inst.height = 600;
  inst.question = fill_template(prompt_asset("task_maze.txt"), {{"path", path_text(gt.path)}});
  inst.answer = gt.valid ? "Yes" : "No";
  inst.truth = gt;
  return inst;
}

}  // namespace

std::vector<MazeCell> maze_tree_path(const MazeGT& maze, MazeCell from, MazeCell to) {
  const int n = maze.rows * maze.cols;
  std::vector<int> parent(static_cast<std::size_t>(n), -2);
  std::queue<MazeCell> q;
  q.push(from);
  parent[static_cast<std::size_t>(index_of(maze, from))] = -1;
  while (!q.empty()) {
    MazeCell c = q.front();
    q.pop();
    if (c == to) break;
    for (Direction d : kDirections) {
      if (maze.wall(c, d)) continue;
      MazeCell nxt = step_cell(c, d);
      if (!inside(maze, nxt) || parent[static_cast<std::size_t>(index_of(maze, nxt))] != -2) continue;
      parent[static_cast<std::size_t>(index_of(maze, nxt))] = index_of(maze, c);
      q.push(nxt);
    }
  }
  if (parent[static_cast<std::size_t>(index_of(maze, to))] == -2) return {};
  std::vector<MazeCell> cells;
  for (int i = index_of(maze, to); i != -1; i = parent[static_cast<std::size_t>(i)])
    cells.push_back({i / maze.cols, i % maze.cols});
  std::reverse(cells.begin(), cells.end());
  return cells;
}

MazePair gen_maze(std::uint64_t seed) {
  Rng rng(seed);
  for (;;) {
    MazeGT gt;
    gt.rows = gt.cols = kMazeSize;
    gt.walls.assign(static_cast<std::size_t>(gt.rows * gt.cols), 0x0f);
    carve_uniform_tree(gt, rng);

    std::vector<std::pair<MazeCell, MazeCell>> candidates;
    for (int a = 0; a < gt.rows * gt.cols; ++a) {
      for (int b = 0; b < gt.rows * gt.cols; ++b) {
        if (a == b) continue;
        MazeCell ca{a / gt.cols, a % gt.cols}, cb{b / gt.cols, b % gt.cols};
        const auto len = static_cast<int>(maze_tree_path(gt, ca, cb).size()) - 1;
        if (len >= kMinPath && len <= kMaxPath) candidates.emplace_back(ca, cb);
      }
    }
    if (candidates.empty()) continue;
    auto [start, end] = candidates[static_cast<std::size_t>(
        rng.integer(0, static_cast<std::int64_t>(candidates.size()) - 1))];
    gt.start = start;
    gt.end = end;
    gt.path = directions_along(maze_tree_path(gt, start, end));
    gt.valid = true;

    // Perturb one move until the result is invalid.
    MazeGT bad = gt;
    bad.valid = false;
    bool found = false;
    for (int attempt = 0; attempt < 200 && !found; ++attempt) {
      auto i = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(gt.path.size()) - 1));
      Direction d;
      do d = kDirections[static_cast<std::size_t>(rng.integer(0, 3))];
      while (d == gt.path[i]);
      bad.path = gt.path;
      bad.path[i] = d;
      MazeCell at;
      if (!follows(bad, bad.path, at) || !(at == bad.end)) found = true;
    }
    if (!found) continue;
    return {maze_instance(gt, seed), maze_instance(bad, seed)};
  }
}

}  // namespace sketchvlm
