#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace llmurl {

bool is_space(char c) noexcept;
std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;
bool istarts_with(std::string_view s, std::string_view prefix) noexcept;

/// Whitespace-delimited words, in order.
std::vector<std::string> split_words(std::string_view text);

/// Words of `text` joined by single spaces.
std::string normalize_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every `{key}` occurrence.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// UTC timestamp "YYYY-MM-DDTHH:MM:SSZ" for unix seconds.
std::string format_utc(long long unix_seconds);
long long unix_now();

}  // namespace llmurl
