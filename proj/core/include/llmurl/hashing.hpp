#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace llmurl {

/// Lowercase hex SHA-256 of the exact bytes of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's contents; throws DataError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace llmurl
