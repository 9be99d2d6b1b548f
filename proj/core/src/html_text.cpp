#include "llmurl/html_text.hpp"

#include <algorithm>

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "llmurl/text_util.hpp"

namespace llmurl {

namespace {

struct Tag {
    std::string name;  // lowercased
    bool closing = false;
    bool self_closing = false;
    std::string id;
    std::vector<std::string> classes;
};

const std::unordered_set<std::string_view> kVoidTags = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr"};

const std::unordered_set<std::string_view> kSkippedTags = {
    "head", "nav", "footer", "header", "noscript", "template", "svg", "math",
    "form", "button", "select", "iframe", "object", "audio", "video", "canvas"};

const std::unordered_set<std::string_view> kRawTextTags = {"script", "style", "textarea"};

const std::unordered_set<std::string_view> kSkippedClasses = {
    "infobox", "navbox", "vertical-navbox", "navbox-inner", "sidebar", "mw-editsection",
    "reference", "reflist", "references", "mw-references-wrap", "navigation-not-searchable",
    "hatnote", "metadata", "ambox", "catlinks", "mw-jump-link", "noprint", "shortdescription",
    "toc", "mw-cite-backlink", "printfooter", "mw-empty-elt"};

const std::unordered_set<std::string_view> kSkippedIds = {
    "toc", "catlinks", "mw-navigation", "footer", "siteSub", "contentSub", "jump-to-nav"};

const std::unordered_set<std::string_view> kStopIds = {
    "References", "Notes_and_references", "References_and_notes"};

const std::unordered_set<std::string_view> kBlockTags = {
    "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table",
    "section", "article", "main", "blockquote", "pre", "dd", "dt", "dl", "figcaption",
    "figure", "hr", "caption", "tbody", "thead", "body", "html", "aside", "address"};

const std::unordered_set<std::string_view> kHeadingTags = {"h1", "h2", "h3", "h4", "h5", "h6"};

bool is_name_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-'
        || c == ':' || c == '_';
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from)
{
    if (needle.empty() || hay.size() < needle.size()) {
        return std::string_view::npos;
    }
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        if (iequals(hay.substr(i, needle.size()), needle)) {
            return i;
        }
    }
    return std::string_view::npos;
}

void append_utf8(std::string& out, std::uint32_t cp)
{
    if (cp == 0xA0) {  // nbsp behaves as a word separator
        out.push_back(' ');
    } else if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

const std::unordered_map<std::string_view, std::uint32_t>& named_entities()
{
    static const std::unordered_map<std::string_view, std::uint32_t> table = {
        {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''},
        {"nbsp", 0xA0}, {"ndash", 0x2013}, {"mdash", 0x2014}, {"hellip", 0x2026},
        {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
        {"copy", 0xA9}, {"reg", 0xAE}, {"times", 0xD7}, {"middot", 0xB7}, {"deg", 0xB0},
        {"minus", 0x2212}, {"thinsp", 0x2009}, {"ensp", 0x2002}, {"emsp", 0x2003},
        {"eacute", 0xE9}, {"egrave", 0xE8}, {"aacute", 0xE1}, {"agrave", 0xE0},
        {"iacute", 0xED}, {"oacute", 0xF3}, {"uacute", 0xFA}, {"ntilde", 0xF1},
        {"ouml", 0xF6}, {"uuml", 0xFC}, {"auml", 0xE4}, {"ccedil", 0xE7}, {"szlig", 0xDF},
        {"laquo", 0xAB}, {"raquo", 0xBB}, {"frac12", 0xBD}, {"para", 0xB6}, {"sect", 0xA7}};
    return table;
}

// Decodes the entity starting at text[i] == '&'. Returns chars consumed, 0 if none.
std::size_t decode_entity(std::string_view text, std::size_t i, std::string& out)
{
    auto semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 12) {
        return 0;
    }
    auto body = text.substr(i + 1, semi - i - 1);
    if (body.size() >= 2 && body[0] == '#') {
        std::uint32_t cp = 0;
        bool hex = body[1] == 'x' || body[1] == 'X';
        auto digits = body.substr(hex ? 2 : 1);
        if (digits.empty()) {
            return 0;
        }
        for (char c : digits) {
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else return 0;
            cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
            if (cp > 0x10FFFF) return 0;
        }
        append_utf8(out, cp);
        return semi - i + 1;
    }
    auto it = named_entities().find(body);
    if (it == named_entities().end()) {
        return 0;
    }
    append_utf8(out, it->second);
    return semi - i + 1;
}

std::string decode_text(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '&') {
            if (auto n = decode_entity(raw, i, out); n > 0) {
                i += n - 1;
                continue;
            }
        }
        out.push_back(raw[i]);
    }
    return out;
}

// Parses the tag whose '<' is at html[pos]; returns index one past '>'.
std::size_t parse_tag(std::string_view html, std::size_t pos, Tag& tag)
{
    std::size_t i = pos + 1;
    if (i < html.size() && html[i] == '/') {
        tag.closing = true;
        ++i;
    }
    std::size_t name_start = i;
    while (i < html.size() && is_name_char(html[i])) {
        ++i;
    }
    tag.name = to_lower_ascii(html.substr(name_start, i - name_start));
    while (i < html.size() && html[i] != '>') {
        if (is_space(html[i])) {
            ++i;
            continue;
        }
        if (html[i] == '/') {
            tag.self_closing = true;
            ++i;
            continue;
        }
        std::size_t attr_start = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '=' && html[i] != '>' && html[i] != '/') {
            ++i;
        }
        auto attr = to_lower_ascii(html.substr(attr_start, i - attr_start));
        if (attr.empty()) {
            ++i;
            continue;
        }
        tag.self_closing = false;
        while (i < html.size() && is_space(html[i])) {
            ++i;
        }
        std::string value;
        if (i < html.size() && html[i] == '=') {
            ++i;
            while (i < html.size() && is_space(html[i])) {
                ++i;
            }
            if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                char q = html[i++];
                auto end = html.find(q, i);
                if (end == std::string_view::npos) {
                    end = html.size();
                }
                value = std::string(html.substr(i, end - i));
                i = end < html.size() ? end + 1 : end;
            } else {
                std::size_t vs = i;
                while (i < html.size() && !is_space(html[i]) && html[i] != '>') {
                    ++i;
                }
                value = std::string(html.substr(vs, i - vs));
            }
        }
        if (attr == "id") {
            tag.id = decode_text(value);
        } else if (attr == "class") {
            tag.classes = split_words(value);
        }
    }
    return i < html.size() ? i + 1 : i;
}

bool should_skip(const Tag& tag)
{
    if (kSkippedTags.count(tag.name) > 0 || kSkippedIds.count(tag.id) > 0) {
        return true;
    }
    for (const auto& c : tag.classes) {
        if (kSkippedClasses.count(c) > 0) {
            return true;
        }
    }
    return false;
}

class Extractor {
  public:
    explicit Extractor(std::string_view html)
        : m_html(html)
        , m_root_mode(html.find("id=\"mw-content-text\"") != std::string_view::npos
                      || html.find("id='mw-content-text'") != std::string_view::npos)
    {}

    std::string run()
    {
        std::size_t i = 0;
        const std::size_t n = m_html.size();
        while (i < n && !m_stopped) {
            char c = m_html[i];
            if (c != '<') {
                auto next = m_html.find('<', i);
                if (next == std::string_view::npos) {
                    next = n;
                }
                if (visible()) {
                    // Source line breaks are plain whitespace; only block
                    // structure starts a new line.
                    auto text = decode_text(m_html.substr(i, next - i));
                    std::replace(text.begin(), text.end(), '\n', ' ');
                    std::replace(text.begin(), text.end(), '\r', ' ');
                    m_out += text;
                }
                i = next;
                continue;
            }
            if (m_html.compare(i, 4, "<!--") == 0) {
                auto end = m_html.find("-->", i + 4);
                i = end == std::string_view::npos ? n : end + 3;
                continue;
            }
            if (i + 1 < n && (m_html[i + 1] == '!' || m_html[i + 1] == '?')) {
                auto end = m_html.find('>', i);
                i = end == std::string_view::npos ? n : end + 1;
                continue;
            }
            bool tag_start = i + 1 < n
                && (is_name_char(m_html[i + 1]) || (m_html[i + 1] == '/' && i + 2 < n && is_name_char(m_html[i + 2])));
            if (!tag_start) {  // stray '<' is text
                if (visible()) {
                    m_out.push_back('<');
                }
                ++i;
                continue;
            }
            Tag tag;
            i = parse_tag(m_html, i, tag);
            if (!tag.closing && kRawTextTags.count(tag.name) > 0 && !tag.self_closing) {
                auto end = find_ci(m_html, "</" + tag.name, i);
                if (end == std::string_view::npos) {
                    i = n;
                } else {
                    auto close = m_html.find('>', end);
                    i = close == std::string_view::npos ? n : close + 1;
                }
                continue;
            }
            handle_tag(tag);
        }
        return finish();
    }

  private:
    struct Region {
        std::string tag;
        int depth = 0;
    };

    [[nodiscard]] bool visible() const
    {
        return m_skip.depth == 0 && (!m_root_mode || m_root.depth > 0);
    }

    static void track(Region& region, const Tag& tag)
    {
        if (region.depth == 0 || tag.name != region.tag) {
            return;
        }
        if (tag.closing) {
            --region.depth;
        } else if (!tag.self_closing && kVoidTags.count(tag.name) == 0) {
            ++region.depth;
        }
    }

    void handle_tag(const Tag& tag)
    {
        // Regions only nest on their own tag name; misnested markup inside a
        // skipped element cannot end the skip early.
        if (m_skip.depth > 0) {
            track(m_skip, tag);
            return;
        }
        if (m_root_mode && m_root.depth == 0) {
            if (!tag.closing && tag.id == "mw-content-text") {
                m_root = {tag.name, 1};
            }
            return;
        }
        if (m_root_mode) {
            track(m_root, tag);
            if (m_root.depth == 0) {
                m_stopped = true;
                return;
            }
        }
        if (!tag.closing && kStopIds.count(tag.id) > 0) {
            cut_at(m_heading_open ? m_heading_start : m_out.size());
            return;
        }
        if (!tag.closing && should_skip(tag)) {
            if (!tag.self_closing && kVoidTags.count(tag.name) == 0) {
                m_skip = {tag.name, 1};
            }
            return;
        }
        if (kHeadingTags.count(tag.name) > 0) {
            if (!tag.closing) {
                m_out.push_back('\n');
                m_heading_open = true;
                m_heading_start = m_out.size();
            } else if (m_heading_open) {
                m_heading_open = false;
                auto heading = normalize_whitespace(std::string_view(m_out).substr(m_heading_start));
                if (heading == "References" || heading == "Notes and references"
                    || heading == "References and notes") {
                    cut_at(m_heading_start);
                    return;
                }
            }
        }
        if (kBlockTags.count(tag.name) > 0) {
            m_out.push_back('\n');
        } else if (tag.name == "td" || tag.name == "th") {
            m_out.push_back(' ');
        }
    }

    void cut_at(std::size_t pos)
    {
        m_out.resize(std::min(pos, m_out.size()));
        m_stopped = true;
    }

    std::string finish() const
    {
        std::string result;
        std::size_t start = 0;
        while (start <= m_out.size()) {
            auto end = m_out.find('\n', start);
            if (end == std::string::npos) {
                end = m_out.size();
            }
            auto line = normalize_whitespace(std::string_view(m_out).substr(start, end - start));
            if (!line.empty()) {
                if (!result.empty()) {
                    result.push_back('\n');
                }
                result += line;
            }
            start = end + 1;
        }
        return result;
    }

    std::string_view m_html;
    std::string m_out;
    bool m_root_mode;
    bool m_stopped = false;
    bool m_heading_open = false;
    std::size_t m_heading_start = 0;
    Region m_skip;
    Region m_root;
};

}  // namespace

std::string extract_text(std::string_view html)
{
    auto text = Extractor(html).run();
    if (text.empty()) {
        throw EmptyDocument("no visible text in document");
    }
    return text;
}

}  // namespace llmurl
