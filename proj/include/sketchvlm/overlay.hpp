#pragma once

// Non-destructive vector overlays: one layer per stroke, drawn over a
// referenced (never modified) background image.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchvlm/annotation.hpp"
#include "sketchvlm/color.hpp"
#include "sketchvlm/geometry.hpp"
#include "sketchvlm/raster.hpp"

namespace sketchvlm {

struct TextElement {
  PixelPoint anchor;
  std::string content;
  double font_px = 12;
};

struct OverlayLayer {
  std::string stroke_id;
  bool visible = true;
  std::vector<PathPrimitive> geometry;
  std::optional<TextElement> text;
  Rgba color;
  double stroke_width = 3;
  double opacity = 1.0;
};

struct OverlayDocument {
  int width = 0;
  int height = 0;
  std::string background_href = "source.png";
  std::vector<OverlayLayer> layers;

  /// Returns false when no layer carries `stroke_id`.
  bool set_visible(const std::string& stroke_id, bool visible);
  std::size_t path_layer_count() const;
  std::size_t text_layer_count() const;
};

/// 8 high-contrast colours used for geometry strokes, in cycle order.
const std::vector<Rgba>& default_palette();

/// 3 px per 1000 px of image width.
double default_stroke_width(int image_width);

struct OverlayOptions {
  std::vector<Rgba> palette = default_palette();
  std::optional<double> stroke_width;  // default_stroke_width() when unset
  std::string background_href = "source.png";
  /// When false, strokes with blocking violations are drawn best-effort
  /// instead of rejecting the whole render.
  bool strict = true;
};

class RenderRejected : public std::runtime_error {
 public:
  explicit RenderRejected(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Builds the overlay for `set` over an image of the given size. Out-of-range
/// points are clamped (they stay reported by validate()); any other violation
/// rejects the render in strict mode.
OverlayDocument render_overlay(const AnnotationSet& set, const CoordinateFrame& frame,
                               int width, int height, const OverlayOptions& options = {});

/// SVG 1.1 text. Deterministic for identical documents.
std::string to_svg(const OverlayDocument& doc);

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rasterises the visible layers over a copy of `base`.
RasterImage composite(const RasterImage& base, const OverlayDocument& overlay);

// Coordinate-ruler augmentation.

struct GridOptions {
  std::optional<int> left_margin;    // default 6% of width
  std::optional<int> bottom_margin;  // default 6% of height
  int tick_step = 1;                 // label every n cells
  std::optional<double> label_px;    // default 2.5% of height
};

struct AxisLabel {
  int value = 0;
  PixelPoint center;  // in augmented-image pixels
};

struct GridAugmentation {
  int left_margin = 0;
  int bottom_margin = 0;
  int tick_step = 1;
  int glyph_scale = 1;
  int augmented_width = 0;
  int augmented_height = 0;
  std::vector<AxisLabel> bottom_labels;
  std::vector<AxisLabel> left_labels;
};

/// Computes ruler geometry without drawing. Throws std::invalid_argument for
/// normalized frames.
GridAugmentation grid_layout(int width, int height, const CoordinateFrame& frame,
                             const GridOptions& options = {});

/// Returns a copy of `image` with labelled rulers appended on the left and
/// bottom. The original occupies (left_margin, 0) .. (left_margin + W, H),
/// pixel for pixel.
RasterImage grid_augment(const RasterImage& image, const CoordinateFrame& frame,
                         const GridOptions& options = {});

}  // namespace sketchvlm
