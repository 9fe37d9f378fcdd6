#include "sketchvlm/coords.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace sketchvlm {

PixelPoint pixel_of(const GridRef& ref, const CoordinateFrame& frame, int width,
                    int height) {
  if (ref.col < 0 || ref.col > frame.max_col() || ref.row < 0 ||
      ref.row > frame.max_row()) {
    throw OutOfFrame(fmt::format("{} lies outside the {}x{} frame", grid_token(ref),
                                 frame.max_col(), frame.max_row()));
  }
  const double w = width;
  const double h = height;
  if (frame.mode == FrameMode::GridCells) {
    const double cell_w = w / (frame.res_x + 1);
    const double cell_h = h / (frame.res_y + 1);
    const double x = (ref.col + 0.5) * cell_w;
    const double y = frame.origin == Origin::BottomLeft ? h - (ref.row + 0.5) * cell_h
                                                        : (ref.row + 0.5) * cell_h;
    return {x, y};
  }
  const double x = ref.col * w / frame.scale;
  const double y = frame.origin == Origin::BottomLeft ? h - ref.row * h / frame.scale
                                                      : ref.row * h / frame.scale;
  return {x, y};
}

GridRef clamp_to_frame(const GridRef& ref, const CoordinateFrame& frame) {
  return {std::clamp(ref.col, 0, frame.max_col()), std::clamp(ref.row, 0, frame.max_row())};
}

GridRef grid_of(const PixelPoint& p, const CoordinateFrame& frame, int width, int height) {
  const double w = width;
  const double h = height;
  GridRef ref;
  if (frame.mode == FrameMode::GridCells) {
    const double cell_w = w / (frame.res_x + 1);
    const double cell_h = h / (frame.res_y + 1);
    ref.col = static_cast<int>(std::floor(p.x / cell_w));
    const double from_top = p.y / cell_h;
    ref.row = frame.origin == Origin::BottomLeft
                  ? static_cast<int>(std::floor((h - p.y) / cell_h))
                  : static_cast<int>(std::floor(from_top));
  } else {
    ref.col = static_cast<int>(std::lround(p.x * frame.scale / w));
    ref.row = frame.origin == Origin::BottomLeft
                  ? static_cast<int>(std::lround((h - p.y) * frame.scale / h))
                  : static_cast<int>(std::lround(p.y * frame.scale / h));
  }
  return clamp_to_frame(ref, frame);
}

double cell_height(const CoordinateFrame& frame, int height) {
  const int rows = frame.mode == FrameMode::GridCells ? frame.res_y + 1 : 51;
  return static_cast<double>(height) / rows;
}

}  // namespace sketchvlm
