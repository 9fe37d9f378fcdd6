#include "sketchvlm/color.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace sketchvlm {
namespace {

constexpr std::array<std::pair<std::string_view, std::uint32_t>, 26>
    kNamedColors{{
        {"black", 0x000000},   {"white", 0xffffff},  {"red", 0xff0000},
        {"lime", 0x00ff00},    {"green", 0x008000},  {"blue", 0x0000ff},
        {"yellow", 0xffff00},  {"cyan", 0x00ffff},   {"aqua", 0x00ffff},
        {"magenta", 0xff00ff}, {"fuchsia", 0xff00ff}, {"gray", 0x808080},
        {"grey", 0x808080},    {"silver", 0xc0c0c0}, {"maroon", 0x800000},
        {"olive", 0x808000},   {"purple", 0x800080}, {"teal", 0x008080},
        {"navy", 0x000080},    {"orange", 0xffa500}, {"pink", 0xffc0cb},
        {"brown", 0xa52a2a},   {"gold", 0xffd700},   {"violet", 0xee82ee},
        {"indigo", 0x4b0082},  {"darkgreen", 0x006400},
    }};

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

Rgba from_packed(std::uint32_t v) {
  return Rgba{static_cast<std::uint8_t>(v >> 16),
              static_cast<std::uint8_t>((v >> 8) & 0xff),
              static_cast<std::uint8_t>(v & 0xff), 255};
}

}  // namespace

std::optional<Rgba> parse_color(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  if (text.empty()) return std::nullopt;

  if (text.front() == '#') {
    text.remove_prefix(1);
    if (text.size() != 6 && text.size() != 3) return std::nullopt;
    std::uint32_t packed = 0;
    for (char c : text) {
      const int d = hex_digit(c);
      if (d < 0) return std::nullopt;
      packed = packed * 16 + static_cast<std::uint32_t>(d);
      if (text.size() == 3) packed = packed * 16 + static_cast<std::uint32_t>(d);
    }
    return from_packed(packed);
  }

  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  for (const auto& [name, packed] : kNamedColors) {
    if (name == lower) return from_packed(packed);
  }
  return std::nullopt;
}

std::string to_hex(const Rgba& color) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out = "#";
  for (std::uint8_t v : {color.r, color.g, color.b}) {
    out += kDigits[v >> 4];
    out += kDigits[v & 0xf];
  }
  return out;
}

}  // namespace sketchvlm
