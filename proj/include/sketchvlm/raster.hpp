#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sketchvlm/color.hpp"
#include "sketchvlm/geometry.hpp"

namespace sketchvlm {

/// 8-bit RGBA image, rows top to bottom.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgba fill = {255, 255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba c);
  /// Source-over blend of `c` with extra opacity in [0, 1].
  void blend(int x, int y, Rgba c, double opacity = 1.0);

  RasterImage crop(int x0, int y0, int w, int h) const;
  /// Copies `src` with its top-left at (x0, y0), clipped to this image.
  void paste(const RasterImage& src, int x0, int y0);

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

class ImageDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_png(const RasterImage& image);
/// Throws ImageDecodeError for anything that is not a readable PNG.
RasterImage decode_png(std::span<const std::uint8_t> data);
void write_png(const RasterImage& image, const std::filesystem::path& path);
RasterImage read_png(const std::filesystem::path& path);

/// Hex SHA-256 of width, height and the pixel buffer.
std::string pixel_digest(const RasterImage& image);

/// Binary coverage mask. Shapes are drawn into a mask and then blended once,
/// so overlapping parts of one shape never double-blend.
class CoverageMask {
 public:
  CoverageMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool covered(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void mark(int x, int y);

  void fill_disc(PixelPoint center, double radius);
  /// Segment with round caps of total width `width`.
  void stroke_segment(PixelPoint a, PixelPoint b, double width);
  void stroke_polyline(std::span<const PixelPoint> points, double width);
  void fill_rect(double x0, double y0, double x1, double y1);
  /// Draws text with its top-left corner at (x, y); glyphs are 6x11 cells
  /// scaled by an integer factor.
  void draw_text(double x, double y, std::string_view text, int scale);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

void blend_mask(RasterImage& image, const CoverageMask& mask, Rgba color, double opacity = 1.0);

inline constexpr int kGlyphWidth = 6;
inline constexpr int kGlyphHeight = 11;

struct TextExtent {
  int width = 0;
  int height = 0;
};
TextExtent text_extent(std::string_view text, int scale);
/// Integer glyph scale whose rendered height is closest to `pixel_height`.
int glyph_scale_for_height(double pixel_height);

}  // namespace sketchvlm
