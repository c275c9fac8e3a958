#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afro {

// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count
// as one scalar each.
std::size_t utf8_length(std::string_view s);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Writes to a sibling temp file then renames, so readers never see a
// partial artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace afro
