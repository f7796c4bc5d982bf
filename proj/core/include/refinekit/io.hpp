#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace refinekit {

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never observe a
// partially written file. Parent directories are created as needed.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Line-delimited record files: one JSON object per line.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::vector<std::string> read_lines(const std::filesystem::path& path);

} // namespace refinekit
