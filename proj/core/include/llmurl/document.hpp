#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace llmurl {

enum class FetchStatus { ok, not_found, transport_error, skipped };

std::string_view to_string(FetchStatus status) noexcept;
FetchStatus fetch_status_from_string(std::string_view s);

/// A fetched page. ok <=> text present and word_count counts its
/// whitespace-delimited words; not_found never carries text.
struct Document {
    std::string url;
    FetchStatus fetch_status = FetchStatus::skipped;
    std::optional<std::string> html;
    std::optional<std::string> text;
    std::size_t word_count = 0;
    long long fetched_at = 0;  // unix seconds; cache hits report the store time
    bool from_cache = false;

    [[nodiscard]] bool ok() const noexcept { return fetch_status == FetchStatus::ok; }
};

}  // namespace llmurl
