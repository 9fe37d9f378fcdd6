#include "sketchvlm/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <png.h>

namespace sketchvlm {

namespace {

constexpr std::uint8_t kGlyphs[][kGlyphHeight] = {
#include "glyphs_6x11.inc"
};

}  // namespace

RasterImage::RasterImage(int width, int height, Rgba fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
  pixels_.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = fill.a;
  }
}

Rgba RasterImage::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 4;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2], pixels_[i + 3]};
}

void RasterImage::set(int x, int y, Rgba c) {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 4;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
  pixels_[i + 3] = c.a;
}

void RasterImage::blend(int x, int y, Rgba c, double opacity) {
  const double a = std::clamp(opacity, 0.0, 1.0) * c.a / 255.0;
  if (a <= 0) return;
  if (a >= 1.0) {
    set(x, y, {c.r, c.g, c.b, 255});
    return;
  }
  const Rgba d = at(x, y);
  const double da = d.a / 255.0;
  const double out_a = a + da * (1 - a);
  auto mix = [&](std::uint8_t s, std::uint8_t t) {
    return static_cast<std::uint8_t>(
        std::lround((s * a + t * da * (1 - a)) / (out_a > 0 ? out_a : 1)));
  };
  set(x, y, {mix(c.r, d.r), mix(c.g, d.g), mix(c.b, d.b),
             static_cast<std::uint8_t>(std::lround(out_a * 255))});
}

RasterImage RasterImage::crop(int x0, int y0, int w, int h) const {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > width_ || y0 + h > height_) {
    throw std::out_of_range("crop rectangle outside image");
  }
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    std::memcpy(&out.pixels_[static_cast<std::size_t>(y) * w * 4],
                &pixels_[(static_cast<std::size_t>(y + y0) * width_ + x0) * 4],
                static_cast<std::size_t>(w) * 4);
  }
  return out;
}

void RasterImage::paste(const RasterImage& src, int x0, int y0) {
  for (int y = 0; y < src.height(); ++y) {
    const int ty = y + y0;
    if (ty < 0 || ty >= height_) continue;
    for (int x = 0; x < src.width(); ++x) {
      const int tx = x + x0;
      if (tx < 0 || tx >= width_) continue;
      set(tx, ty, src.at(x, y));
    }
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.bytes().data(), 0, nullptr)) {
    throw std::runtime_error(fmt::format("PNG encode failed: {}", png.message));
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.bytes().data(), 0,
                                 nullptr)) {
    throw std::runtime_error(fmt::format("PNG encode failed: {}", png.message));
  }
  out.resize(size);
  return out;
}

RasterImage decode_png(std::span<const std::uint8_t> data) {
  if (data.empty()) throw ImageDecodeError("empty image data");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, data.data(), data.size())) {
    throw ImageDecodeError(fmt::format("not a PNG image: {}", png.message));
  }
  png.format = PNG_FORMAT_RGBA;
  RasterImage out(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, out.bytes().data(), 0, nullptr)) {
    png_image_free(&png);
    throw ImageDecodeError(fmt::format("PNG decode failed: {}", png.message));
  }
  return out;
}

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RasterImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageDecodeError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::string pixel_digest(const RasterImage& image) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.width()),
                                 static_cast<std::uint32_t>(image.height())};
  EVP_DigestUpdate(ctx, dims, sizeof(dims));
  EVP_DigestUpdate(ctx, image.bytes().data(), image.bytes().size());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

CoverageMask::CoverageMask(int width, int height)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

void CoverageMask::mark(int x, int y) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  bits_[static_cast<std::size_t>(y) * width_ + x] = 1;
}

void CoverageMask::fill_disc(PixelPoint c, double radius) {
  const int x0 = static_cast<int>(std::floor(c.x - radius));
  const int x1 = static_cast<int>(std::ceil(c.x + radius));
  const int y0 = static_cast<int>(std::floor(c.y - radius));
  const int y1 = static_cast<int>(std::ceil(c.y + radius));
  const double r2 = radius * radius;
  for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x) {
      const double dx = x + 0.5 - c.x;
      const double dy = y + 0.5 - c.y;
      if (dx * dx + dy * dy <= r2) mark(x, y);
    }
  }
}

void CoverageMask::stroke_segment(PixelPoint a, PixelPoint b, double width) {
  const double r = width / 2.0;
  const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - r));
  const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + r));
  const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - r));
  const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + r));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double r2 = r * r;
  for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x) {
      const double px = x + 0.5 - a.x;
      const double py = y + 0.5 - a.y;
      double t = len2 > 0 ? (px * dx + py * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - t * dx;
      const double ey = py - t * dy;
      if (ex * ex + ey * ey <= r2) mark(x, y);
    }
  }
}

void CoverageMask::stroke_polyline(std::span<const PixelPoint> points, double width) {
  if (points.size() == 1) {
    fill_disc(points.front(), width / 2.0);
    return;
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    stroke_segment(points[i], points[i + 1], width);
  }
}

void CoverageMask::fill_rect(double x0, double y0, double x1, double y1) {
  for (int y = std::max(0, static_cast<int>(std::floor(y0)));
       y < std::min(height_, static_cast<int>(std::ceil(y1))); ++y) {
    for (int x = std::max(0, static_cast<int>(std::floor(x0)));
         x < std::min(width_, static_cast<int>(std::ceil(x1))); ++x) {
      if (x + 0.5 >= x0 && x + 0.5 <= x1 && y + 0.5 >= y0 && y + 0.5 <= y1) mark(x, y);
    }
  }
}

void CoverageMask::draw_text(double x, double y, std::string_view text, int scale) {
  scale = std::max(1, scale);
  const int ox = static_cast<int>(std::lround(x));
  const int oy = static_cast<int>(std::lround(y));
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 32 || c > 126) c = '?';
    const auto& glyph = kGlyphs[c - 32];
    const int gx = ox + static_cast<int>(i) * kGlyphWidth * scale;
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (!(glyph[row] & (1u << (kGlyphWidth - 1 - col)))) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            mark(gx + col * scale + sx, oy + row * scale + sy);
          }
        }
      }
    }
  }
}

void blend_mask(RasterImage& image, const CoverageMask& mask, Rgba color, double opacity) {
  const int w = std::min(image.width(), mask.width());
  const int h = std::min(image.height(), mask.height());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.covered(x, y)) image.blend(x, y, color, opacity);
    }
  }
}

TextExtent text_extent(std::string_view text, int scale) {
  scale = std::max(1, scale);
  return {static_cast<int>(text.size()) * kGlyphWidth * scale, kGlyphHeight * scale};
}

int glyph_scale_for_height(double pixel_height) {
  return std::max(1, static_cast<int>(std::lround(pixel_height / kGlyphHeight)));
}

}  // namespace sketchvlm
