#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmurl/error.hpp"

namespace llmurl {

inline constexpr std::string_view kWikipediaHost = "en.wikipedia.org";
inline constexpr std::string_view kWikipediaArticlePrefix = "https://en.wikipedia.org/wiki/";

enum class UrlStatus { valid_wikipedia, wrong_domain, invalid_syntax };

std::string_view to_string(UrlStatus status) noexcept;
UrlStatus url_status_from_string(std::string_view s);

struct ExtractedUrl {
    std::string raw;
    std::string normalized;
    UrlStatus status = UrlStatus::invalid_syntax;
    /// Percent-decoded part after "/wiki/"; set only for valid_wikipedia.
    std::optional<std::string> title;

    friend bool operator==(const ExtractedUrl&, const ExtractedUrl&) = default;
};

struct GenerationRecord {
    std::string question_id;
    std::string raw_text;
    std::vector<ExtractedUrl> urls;  // first-occurrence order, unique by normalized form
};

class InvalidSyntax : public Error {
  public:
    using Error::Error;
};

struct ParsedUrl {
    std::string scheme;
    std::string host;
    std::string port;  // empty when absent
    std::string path;
    std::string query;     // without '?'
    std::string fragment;  // without '#'
};

/// Lexical parse of an absolute URL. Empty optional on syntax errors (missing
/// "://", bad scheme, empty or malformed host, non-numeric port).
std::optional<ParsedUrl> parse_url(std::string_view url);

/// Canonical form used for dedup, caching and classification:
///  - scheme/host lowercased; https forced for *.wikipedia.org; default ports dropped
///  - query and fragment removed
///  - spaces in the path become '_' on Wikipedia hosts, "%20" elsewhere
///  - trailing '.', ',', ';' and closing quotes stripped from the path
/// Percent-encoding is left untouched. Throws InvalidSyntax.
std::string normalize_url(std::string_view raw);

UrlStatus classify(std::string_view normalized);

/// Under restriction only valid_wikipedia URLs are fetched; without it,
/// wrong_domain URLs are fetched too. invalid_syntax never is.
bool is_fetchable(UrlStatus status, bool restrict_to_wikipedia) noexcept;

/// Article title of a normalized en.wikipedia.org URL, percent-decoded.
std::optional<std::string> wikipedia_title(std::string_view normalized);

std::string percent_decode(std::string_view s);

/// Titles compare equal modulo '_' vs ' ' and surrounding whitespace.
bool same_title(std::string_view a, std::string_view b);

/// All URLs found in free text. A match starts at "http://" or "https://"
/// (case-insensitive) and runs to whitespace or one of <>"[]{}|\^`.
/// Trailing sentence punctuation, '*', and an unbalanced closing
/// parenthesis are then trimmed. URLs split across lines are not re-joined.
std::vector<ExtractedUrl> extract_urls(std::string_view raw_text);

/// Retrieval prompts end with the Wikipedia prefix, so a model's output
/// usually starts mid-URL ("/Jellyfish\n..."). Re-attaches the prefix when
/// the output begins with '/'; other outputs are returned unchanged.
std::string reattach_url_prefix(std::string_view url_prefix, std::string_view output);

}  // namespace llmurl
