#include "llmurl/url_extract.hpp"

#include <algorithm>
#include <regex>
#include <unordered_set>

#include "llmurl/text_util.hpp"

namespace llmurl {

std::string_view to_string(UrlStatus status) noexcept
{
    switch (status) {
    case UrlStatus::valid_wikipedia: return "valid_wikipedia";
    case UrlStatus::wrong_domain: return "wrong_domain";
    case UrlStatus::invalid_syntax: return "invalid_syntax";
    }
    return "invalid_syntax";
}

UrlStatus url_status_from_string(std::string_view s)
{
    if (s == "valid_wikipedia") return UrlStatus::valid_wikipedia;
    if (s == "wrong_domain") return UrlStatus::wrong_domain;
    if (s == "invalid_syntax") return UrlStatus::invalid_syntax;
    throw DataError("unknown url status: " + std::string(s));
}

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool valid_scheme(std::string_view s)
{
    if (s.empty() || !is_alpha(s[0])) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) {
        return is_alpha(c) || is_digit(c) || c == '+' || c == '-' || c == '.';
    });
}

bool valid_hostname(std::string_view host)
{
    if (host.empty()) {
        return false;
    }
    if (host.front() == '[') {  // IPv6 literal
        return host.size() > 2 && host.back() == ']'
            && std::all_of(host.begin() + 1, host.end() - 1, [](char c) {
                   return is_digit(c) || c == ':' || c == '.' || (c >= 'a' && c <= 'f')
                       || (c >= 'A' && c <= 'F');
               });
    }
    std::size_t label_start = 0;
    for (std::size_t i = 0; i <= host.size(); ++i) {
        if (i == host.size() || host[i] == '.') {
            auto label = host.substr(label_start, i - label_start);
            if (label.empty() || label.front() == '-' || label.back() == '-') {
                return false;
            }
            label_start = i + 1;
            continue;
        }
        char c = host[i];
        if (!(is_alpha(c) || is_digit(c) || c == '-')) {
            return false;
        }
    }
    return true;
}

bool is_wikipedia_host(std::string_view host)
{
    return host == "wikipedia.org"
        || (host.size() > 14 && host.substr(host.size() - 14) == ".wikipedia.org");
}

// UTF-8 closing quotation marks: U+2019, U+201D.
constexpr std::string_view kRightSingleQuote = "\xE2\x80\x99";
constexpr std::string_view kRightDoubleQuote = "\xE2\x80\x9D";

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Strips trailing '.', ',', ';', '\'', '"' and closing curly quotes.
void strip_sentence_punct(std::string& s)
{
    for (;;) {
        if (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == '\''
                           || s.back() == '"')) {
            s.pop_back();
        } else if (ends_with(s, kRightSingleQuote) || ends_with(s, kRightDoubleQuote)) {
            s.resize(s.size() - 3);
        } else {
            return;
        }
    }
}

}  // namespace

std::optional<ParsedUrl> parse_url(std::string_view url)
{
    auto sep = url.find("://");
    if (sep == std::string_view::npos) {
        return std::nullopt;
    }
    ParsedUrl p;
    p.scheme = std::string(url.substr(0, sep));
    if (!valid_scheme(p.scheme)) {
        return std::nullopt;
    }
    auto rest = url.substr(sep + 3);
    auto auth_end = rest.find_first_of("/?#");
    auto authority = rest.substr(0, auth_end);
    rest = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        authority.remove_prefix(at + 1);
    }
    std::string_view host = authority;
    if (auto colon = authority.rfind(':');
        colon != std::string_view::npos && authority.find(']', colon) == std::string_view::npos) {
        host = authority.substr(0, colon);
        p.port = std::string(authority.substr(colon + 1));
        if (p.port.empty() || !std::all_of(p.port.begin(), p.port.end(), is_digit)) {
            return std::nullopt;
        }
    }
    if (!valid_hostname(host)) {
        return std::nullopt;
    }
    p.host = std::string(host);

    if (auto hash = rest.find('#'); hash != std::string_view::npos) {
        p.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    if (auto q = rest.find('?'); q != std::string_view::npos) {
        p.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    p.path = std::string(rest);
    return p;
}

std::string normalize_url(std::string_view raw)
{
    std::string candidate(trim(raw));
    strip_sentence_punct(candidate);
    auto parsed = parse_url(candidate);
    if (!parsed) {
        throw InvalidSyntax("unparseable URL: " + candidate);
    }
    ParsedUrl& p = *parsed;
    p.scheme = to_lower_ascii(p.scheme);
    p.host = to_lower_ascii(p.host);
    const bool wiki = is_wikipedia_host(p.host);
    if (wiki && p.scheme == "http") {
        p.scheme = "https";
    }
    if ((p.scheme == "https" && p.port == "443") || (p.scheme == "http" && p.port == "80")) {
        p.port.clear();
    }
    std::string path;
    path.reserve(p.path.size());
    for (char c : p.path) {
        if (c == ' ') {
            path.append(wiki ? "_" : "%20");
        } else {
            path.push_back(c);
        }
    }
    strip_sentence_punct(path);

    std::string out = p.scheme + "://" + p.host;
    if (!p.port.empty()) {
        out += ":" + p.port;
    }
    out += path;
    return out;
}

std::optional<std::string> wikipedia_title(std::string_view normalized)
{
    auto p = parse_url(normalized);
    if (!p || to_lower_ascii(p->host) != kWikipediaHost || !p->port.empty()) {
        return std::nullopt;
    }
    auto scheme = to_lower_ascii(p->scheme);
    if (scheme != "https" && scheme != "http") {
        return std::nullopt;
    }
    constexpr std::string_view wiki = "/wiki/";
    if (p->path.size() <= wiki.size() || p->path.compare(0, wiki.size(), wiki) != 0) {
        return std::nullopt;
    }
    auto title = percent_decode(std::string_view(p->path).substr(wiki.size()));
    if (trim(title).empty()) {
        return std::nullopt;
    }
    return title;
}

UrlStatus classify(std::string_view normalized)
{
    if (!parse_url(normalized)) {
        return UrlStatus::invalid_syntax;
    }
    return wikipedia_title(normalized) ? UrlStatus::valid_wikipedia : UrlStatus::wrong_domain;
}

bool is_fetchable(UrlStatus status, bool restrict_to_wikipedia) noexcept
{
    switch (status) {
    case UrlStatus::valid_wikipedia: return true;
    case UrlStatus::wrong_domain: return !restrict_to_wikipedia;
    case UrlStatus::invalid_syntax: return false;
    }
    return false;
}

std::string percent_decode(std::string_view s)
{
    auto hexval = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hexval(s[i + 1]);
            int lo = hexval(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

bool same_title(std::string_view a, std::string_view b)
{
    auto canon = [](std::string_view t) {
        std::string s(trim(t));
        std::replace(s.begin(), s.end(), '_', ' ');
        return normalize_whitespace(s);
    };
    return canon(a) == canon(b);
}

namespace {

const std::regex& url_pattern()
{
    static const std::regex re(R"(https?://[^\s<>"\[\]{}|\\^`]+)",
                               std::regex::icase | std::regex::optimize);
    return re;
}

std::string trim_match(std::string s)
{
    for (;;) {
        std::size_t before = s.size();
        strip_sentence_punct(s);
        while (!s.empty() && (s.back() == ':' || s.back() == '!' || s.back() == '?' || s.back() == '*')) {
            s.pop_back();
        }
        if (!s.empty() && s.back() == ')'
            && std::count(s.begin(), s.end(), ')') > std::count(s.begin(), s.end(), '(')) {
            s.pop_back();
        }
        if (s.size() == before) {
            return s;
        }
    }
}

}  // namespace

std::vector<ExtractedUrl> extract_urls(std::string_view raw_text)
{
    std::vector<ExtractedUrl> out;
    std::unordered_set<std::string> seen;
    using It = std::string_view::const_iterator;
    std::regex_iterator<It> it(raw_text.begin(), raw_text.end(), url_pattern());
    for (; it != std::regex_iterator<It>(); ++it) {
        ExtractedUrl u;
        u.raw = trim_match(it->str());
        try {
            u.normalized = normalize_url(u.raw);
            u.status = classify(u.normalized);
        } catch (const InvalidSyntax&) {
            u.normalized = u.raw;
            u.status = UrlStatus::invalid_syntax;
        }
        if (u.status == UrlStatus::valid_wikipedia) {
            u.title = wikipedia_title(u.normalized);
        }
        if (seen.insert(u.normalized).second) {
            out.push_back(std::move(u));
        }
    }
    return out;
}

std::string reattach_url_prefix(std::string_view url_prefix, std::string_view output)
{
    if (!output.empty() && output.front() == '/') {
        std::string joined(url_prefix);
        joined.append(output);
        return joined;
    }
    return std::string(output);
}

}  // namespace llmurl
