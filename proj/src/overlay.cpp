#include "sketchvlm/overlay.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sketchvlm/coords.hpp"

namespace sketchvlm {

bool OverlayDocument::set_visible(const std::string& stroke_id, bool visible) {
  bool found = false;
  for (auto& layer : layers) {
    if (layer.stroke_id == stroke_id) {
      layer.visible = visible;
      found = true;
    }
  }
  return found;
}

std::size_t OverlayDocument::path_layer_count() const {
  return static_cast<std::size_t>(std::count_if(
      layers.begin(), layers.end(), [](const OverlayLayer& l) { return !l.text; }));
}

std::size_t OverlayDocument::text_layer_count() const {
  return layers.size() - path_layer_count();
}

const std::vector<Rgba>& default_palette() {
  static const std::vector<Rgba> palette = {
      {0xe6, 0x19, 0x4b, 255}, {0x3c, 0xb4, 0x4b, 255}, {0x43, 0x63, 0xd8, 255},
      {0xf5, 0x82, 0x31, 255}, {0x91, 0x1e, 0xb4, 255}, {0x00, 0x80, 0x80, 255},
      {0xf0, 0x32, 0xe6, 255}, {0x80, 0x00, 0x00, 255},
  };
  return palette;
}

double default_stroke_width(int image_width) { return 3.0 * image_width / 1000.0; }

RenderRejected::RenderRejected(std::vector<Violation> violations)
    : std::runtime_error([&] {
        std::string msg = "annotation set cannot be rendered:";
        for (const auto& v : violations) {
          msg += fmt::format(" [{} {}: {}]", to_string(v.kind), v.stroke_id, v.description);
        }
        return msg;
      }()),
      violations_(std::move(violations)) {}

OverlayDocument render_overlay(const AnnotationSet& set, const CoordinateFrame& frame,
                               int width, int height, const OverlayOptions& options) {
  if (options.strict) {
    std::vector<Violation> blocking;
    for (auto& v : validate(set, frame)) {
      if (v.kind != ViolationKind::OutOfRange && v.kind != ViolationKind::EarlyFinalAnswer) {
        blocking.push_back(std::move(v));
      }
    }
    if (!blocking.empty()) throw RenderRejected(std::move(blocking));
  }
  if (options.palette.empty()) throw std::invalid_argument("empty palette");

  OverlayDocument doc;
  doc.width = width;
  doc.height = height;
  doc.background_href = options.background_href;
  const double stroke_width = options.stroke_width.value_or(default_stroke_width(width));

  std::size_t geometry_index = 0;
  for (const Stroke& stroke : set.strokes) {
    OverlayLayer layer;
    layer.stroke_id = stroke.id;
    layer.stroke_width = stroke_width;
    if (stroke.text) {
      const auto& style = stroke.text->style;
      layer.color = parse_color(style.color).value_or(Rgba{0, 0, 0, 255});
      if (!stroke.points.empty()) {
        TextElement text;
        text.anchor =
            pixel_of(clamp_to_frame(stroke.points.front(), frame), frame, width, height);
        text.content = stroke.text->content;
        text.font_px = style.unit == SizeUnit::Pixels
                           ? style.size
                           : style.size * cell_height(frame, height);
        layer.text = std::move(text);
      }
    } else {
      layer.color = options.palette[geometry_index++ % options.palette.size()];
      layer.geometry = stroke_to_primitives(stroke, frame, width, height);
    }
    doc.layers.push_back(std::move(layer));
  }
  return doc;
}

namespace {

std::string num(double v) {
  if (std::abs(v) < 5e-4) v = 0.0;
  std::string s = fmt::format("{:.3f}", v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string path_data(const PathPrimitive& prim) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Line>) {
          return fmt::format("M {} {} L {} {}", num(p.a.x), num(p.a.y), num(p.b.x), num(p.b.y));
        } else if constexpr (std::is_same_v<T, CubicChain>) {
          std::string d = fmt::format("M {} {}", num(p.segments.front().p0.x),
                                      num(p.segments.front().p0.y));
          for (const auto& s : p.segments) {
            d += fmt::format(" C {} {} {} {} {} {}", num(s.p1.x), num(s.p1.y), num(s.p2.x),
                             num(s.p2.y), num(s.p3.x), num(s.p3.y));
          }
          return d;
        } else if constexpr (std::is_same_v<T, Polyline>) {
          std::string d;
          for (std::size_t i = 0; i < p.points.size(); ++i) {
            d += fmt::format("{}{} {} {}", i ? " " : "", i ? "L" : "M", num(p.points[i].x),
                             num(p.points[i].y));
          }
          return d;
        } else {
          return {};
        }
      },
      prim);
}

}  // namespace

std::string to_svg(const OverlayDocument& doc) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" "
      "xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\" width=\"{0}\" "
      "height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      doc.width, doc.height);
  out += fmt::format(
      "  <image id=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" "
      "xlink:href=\"{}\"/>\n",
      doc.width, doc.height, xml_escape(doc.background_href));
  for (const OverlayLayer& layer : doc.layers) {
    const std::string id = xml_escape(layer.stroke_id);
    const std::string color = to_hex(layer.color);
    out += fmt::format("  <g id=\"stroke-{}\" data-stroke-id=\"{}\"", id, id);
    if (!layer.visible) out += " visibility=\"hidden\"";
    if (layer.opacity < 1.0) out += fmt::format(" opacity=\"{}\"", num(layer.opacity));
    out += ">\n";
    if (layer.text) {
      out += fmt::format(
          "    <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"{}\" "
          "fill=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\">{}</text>\n",
          num(layer.text->anchor.x), num(layer.text->anchor.y), num(layer.text->font_px),
          color, xml_escape(layer.text->content));
    }
    for (const PathPrimitive& prim : layer.geometry) {
      if (const auto* dot = std::get_if<Dot>(&prim)) {
        out += fmt::format("    <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
                           num(dot->center.x), num(dot->center.y), num(dot->radius), color);
      } else {
        out += fmt::format(
            "    <path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" "
            "stroke-linecap=\"round\" stroke-linejoin=\"round\"/>\n",
            path_data(prim), color, num(layer.stroke_width));
      }
    }
    out += "  </g>\n";
  }
  out += "</svg>\n";
  return out;
}

RasterImage composite(const RasterImage& base, const OverlayDocument& overlay) {
  if (base.width() != overlay.width || base.height() != overlay.height) {
    throw DimensionMismatch(fmt::format("overlay is {}x{} but base image is {}x{}",
                                        overlay.width, overlay.height, base.width(),
                                        base.height()));
  }
  RasterImage out = base;
  for (const OverlayLayer& layer : overlay.layers) {
    if (!layer.visible) continue;
    CoverageMask mask(base.width(), base.height());
    for (const PathPrimitive& prim : layer.geometry) {
      if (const auto* dot = std::get_if<Dot>(&prim)) {
        mask.fill_disc(dot->center, dot->radius);
      } else {
        const auto pts = flatten(prim);
        mask.stroke_polyline(pts, layer.stroke_width);
      }
    }
    if (layer.text) {
      const int scale = glyph_scale_for_height(layer.text->font_px);
      const TextExtent ext = text_extent(layer.text->content, scale);
      mask.draw_text(layer.text->anchor.x - ext.width / 2.0,
                     layer.text->anchor.y - ext.height / 2.0, layer.text->content, scale);
    }
    blend_mask(out, mask, layer.color, layer.opacity);
  }
  return out;
}

GridAugmentation grid_layout(int width, int height, const CoordinateFrame& frame,
                             const GridOptions& options) {
  if (frame.mode != FrameMode::GridCells) {
    throw std::invalid_argument("grid augmentation needs a GridCells frame");
  }
  if (options.tick_step < 1) throw std::invalid_argument("tick_step must be >= 1");
  GridAugmentation g;
  g.left_margin = options.left_margin.value_or(static_cast<int>(std::lround(0.06 * width)));
  g.bottom_margin =
      options.bottom_margin.value_or(static_cast<int>(std::lround(0.06 * height)));
  g.tick_step = options.tick_step;
  g.augmented_width = width + g.left_margin;
  g.augmented_height = height + g.bottom_margin;

  const double cell_w = static_cast<double>(width) / (frame.res_x + 1);
  const double cell_h = static_cast<double>(height) / (frame.res_y + 1);
  const std::string widest_x = std::to_string(frame.res_x);
  const std::string widest_y = std::to_string(frame.res_y);

  // Largest glyph scale that fits the requested height, the label spacing,
  // and the margins.
  int scale = glyph_scale_for_height(options.label_px.value_or(0.025 * height));
  auto fits = [&](int s) {
    const TextExtent ex = text_extent(widest_x, s);
    const TextExtent ey = text_extent(widest_y, s);
    return ex.width + s <= cell_w * g.tick_step && ey.height <= cell_h * g.tick_step + s &&
           ey.width + 2 * s <= g.left_margin && ex.height + 2 * s <= g.bottom_margin;
  };
  while (scale > 1 && !fits(scale)) --scale;
  g.glyph_scale = scale;

  const double tick_len = std::max(2.0, 0.25 * std::min(g.left_margin, g.bottom_margin));
  for (int c = 0; c <= frame.res_x; c += g.tick_step) {
    const double cx = g.left_margin + (c + 0.5) * cell_w;
    const double cy = height + tick_len + (g.bottom_margin - tick_len) / 2.0;
    g.bottom_labels.push_back({c, {cx, cy}});
  }
  for (int r = 0; r <= frame.res_y; r += g.tick_step) {
    const double cy = frame.origin == Origin::BottomLeft ? height - (r + 0.5) * cell_h
                                                         : (r + 0.5) * cell_h;
    const double cx = (g.left_margin - tick_len) / 2.0;
    g.left_labels.push_back({r, {cx, cy}});
  }
  return g;
}

RasterImage grid_augment(const RasterImage& image, const CoordinateFrame& frame,
                         const GridOptions& options) {
  const int w = image.width();
  const int h = image.height();
  const GridAugmentation g = grid_layout(w, h, frame, options);
  RasterImage out(g.augmented_width, g.augmented_height, Rgba{255, 255, 255, 255});
  out.paste(image, g.left_margin, 0);

  CoverageMask ink(out.width(), out.height());
  const double tick_len = std::max(2.0, 0.25 * std::min(g.left_margin, g.bottom_margin));
  const double cell_w = static_cast<double>(w) / (frame.res_x + 1);
  const double cell_h = static_cast<double>(h) / (frame.res_y + 1);
  // Axis lines sit just outside the image region.
  ink.fill_rect(g.left_margin - 1, 0, g.left_margin, h + 1);
  ink.fill_rect(g.left_margin - 1, h, g.left_margin + w, h + 1);
  for (int k = 0; k <= frame.res_x + 1; ++k) {
    const double x = std::min(g.left_margin + k * cell_w, g.left_margin + w - 0.5);
    ink.fill_rect(std::floor(x), h, std::floor(x) + 1, h + tick_len);
  }
  for (int k = 0; k <= frame.res_y + 1; ++k) {
    const double y = std::min(k * cell_h, h - 0.5);
    ink.fill_rect(g.left_margin - tick_len, std::floor(y), g.left_margin, std::floor(y) + 1);
  }
  for (const auto* labels : {&g.bottom_labels, &g.left_labels}) {
    for (const AxisLabel& label : *labels) {
      const std::string text = std::to_string(label.value);
      const TextExtent ext = text_extent(text, g.glyph_scale);
      ink.draw_text(label.center.x - ext.width / 2.0, label.center.y - ext.height / 2.0, text,
                    g.glyph_scale);
    }
  }
  // Never let ruler ink touch the original pixels.
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const bool inside = x >= g.left_margin && y < h;
      if (!inside && ink.covered(x, y)) out.set(x, y, {0, 0, 0, 255});
    }
  }
  return out;
}

}  // namespace sketchvlm
