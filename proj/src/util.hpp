#pragma once

// Small internal helpers shared across modules.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sketchvlm {

std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);
void append_line(const std::filesystem::path& path, std::string_view line);

/// Lowercase, trims and collapses internal whitespace.
std::string normalize_answer(std::string_view text);

}  // namespace sketchvlm
