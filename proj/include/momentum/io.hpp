#pragma once

// Small text and file helpers shared by the writers and the CLI.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace momentum::io {

/// Shortest decimal string that round-trips to the same double. NaN is "nan".
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text) noexcept;
std::optional<long long> parse_int(std::string_view text) noexcept;

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text) noexcept;
std::string lower(std::string_view text);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Writes a row of already-formatted cells joined by `sep`, newline-terminated.
std::string join_row(const std::vector<std::string>& cells, char sep = ',');

}  // namespace momentum::io
