#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace llmurl {

struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> gold_answers;

    /// Throws DataError on empty text or an empty/blank gold answer list.
    void validate() const;
};

/// A worked example shown before the target question in few-shot prompts.
struct Demonstration {
    std::string question_text;
    std::vector<std::string> urls;
};

inline constexpr std::string_view kDefaultUrlPrefix = "https://en.wikipedia.org/wiki";

struct RetrievalPromptSpec {
    int m = 10;
    std::vector<Demonstration> demonstrations;  // empty => zero-shot
    std::string url_prefix{kDefaultUrlPrefix};

    void validate() const;
};

/// Every piece of fixed prompt wording lives here. Placeholders:
/// {question}, {m}, {index}, {text}. The defaults are compiled in from an
/// embedded JSON resource; a template file may override any subset of keys.
struct PromptTemplate {
    std::string question_line;
    std::string retrieval_instruction;
    std::string passage_line;
    std::string reader_instruction;
    std::string closed_book_instruction;
    std::string reconstruction_instruction;

    static const PromptTemplate& defaults();
    static PromptTemplate from_json_text(std::string_view json_text);
    static PromptTemplate load(const std::filesystem::path& path);
};

/// The embedded default template, as JSON.
std::string_view default_template_json();

/// Layout (one line each, blank line between blocks):
///
///     Question: <demo question>             } once per demonstration,
///     Which <m> Wikipedia URLs would ...    } followed by up to m of its
///     <url> ...                             } URLs, one per line
///
///     Question: <question>
///     Which <m> Wikipedia URLs would have the answer?
///     https://en.wikipedia.org/wiki         <- prompt ends here, no newline
std::string build_retrieval_prompt(const Question& q, const RetrievalPromptSpec& spec,
                                   const PromptTemplate& tmpl = PromptTemplate::defaults());

/// "Passage i: <text>" lines in rank order (none in closed-book mode), then the
/// question line and one instruction line.
std::string build_reader_prompt(const Question& q, std::span<const std::string> passages,
                                const PromptTemplate& tmpl = PromptTemplate::defaults());

/// Excerpt, blank line, instruction, then the URL prefix as seed.
std::string build_reconstruction_prompt(std::string_view excerpt, std::string_view url_prefix = kDefaultUrlPrefix,
                                        const PromptTemplate& tmpl = PromptTemplate::defaults());

/// d demonstrations drawn uniformly without replacement from `pool`, in draw
/// order. Uses its own bounded-draw over mt19937_64 so a seed yields the same
/// sample on every standard library. Throws ConfigError if |pool| < d.
std::vector<Demonstration> sample_demonstrations(std::span<const Demonstration> pool, std::size_t d,
                                                 std::uint64_t seed);

}  // namespace llmurl
