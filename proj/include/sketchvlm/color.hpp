#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sketchvlm {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Accepts `#rrggbb`, `#rgb` and the CSS basic color keywords plus a few
/// common extended ones. Case-insensitive. Returns nullopt otherwise.
std::optional<Rgba> parse_color(std::string_view text);

/// `#rrggbb`, lowercase.
std::string to_hex(const Rgba& color);

}  // namespace sketchvlm
