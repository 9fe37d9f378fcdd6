#pragma once

#include <stdexcept>

#include "sketchvlm/annotation.hpp"
#include "sketchvlm/geometry.hpp"

namespace sketchvlm {

class OutOfFrame : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Pixel position of a grid reference.
///
/// GridCells: centre of cell (col, row) where the image is divided into
/// (res + 1) cells per axis. Normalized: col * W / scale. BottomLeft frames
/// flip the row axis. Throws OutOfFrame for refs outside the frame.
PixelPoint pixel_of(const GridRef& ref, const CoordinateFrame& frame, int width,
                    int height);

/// Clamps a ref onto the frame's legal range.
GridRef clamp_to_frame(const GridRef& ref, const CoordinateFrame& frame);

/// Nearest grid reference to a pixel position (inverse of pixel_of up to
/// rounding), clamped to the frame.
GridRef grid_of(const PixelPoint& p, const CoordinateFrame& frame, int width, int height);

/// Height in pixels of one cell, used for CellMultiplier text sizes.
/// Normalized frames use the default 50-row grid so sizes stay legible.
double cell_height(const CoordinateFrame& frame, int height);

}  // namespace sketchvlm
