#include "llmurl/prompting.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "llmurl/error.hpp"
#include "llmurl/text_util.hpp"

namespace llmurl {

using json = nlohmann::json;

void Question::validate() const
{
    if (trim(text).empty()) {
        throw DataError("question " + id + ": empty text");
    }
    if (gold_answers.empty()) {
        throw DataError("question " + id + ": no gold answers");
    }
    for (const auto& a : gold_answers) {
        if (trim(a).empty()) {
            throw DataError("question " + id + ": empty gold answer");
        }
    }
}

void RetrievalPromptSpec::validate() const
{
    if (m < 1) {
        throw ConfigError("retrieval prompt: m must be >= 1");
    }
    for (const auto& d : demonstrations) {
        if (d.urls.empty()) {
            throw ConfigError("retrieval prompt: demonstration without URLs");
        }
    }
}

std::string_view default_template_json()
{
    static constexpr std::string_view text = R"json({
  "question_line": "Question: {question}",
  "retrieval_instruction": "Which {m} Wikipedia URLs would have the answer?",
  "passage_line": "Passage {index}: {text}",
  "reader_instruction": "Answer the question in as few words as possible using the passages above.",
  "closed_book_instruction": "Answer the question in as few words as possible.",
  "reconstruction_instruction": "Which Wikipedia URL is this text from?"
})json";
    return text;
}

namespace {

PromptTemplate parse_template(std::string_view text, const PromptTemplate* base)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("prompt template: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("prompt template: expected a JSON object");
    }
    static const std::set<std::string> known{"question_line",       "retrieval_instruction",
                                             "passage_line",        "reader_instruction",
                                             "closed_book_instruction", "reconstruction_instruction"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError("prompt template: unknown key '" + key + "'");
        }
        if (!value.is_string()) {
            throw ConfigError("prompt template: " + key + " must be a string");
        }
    }
    PromptTemplate t = base ? *base : PromptTemplate{};
    auto take = [&](const char* key, std::string& field) {
        if (j.contains(key)) {
            field = j.at(key).get<std::string>();
        }
    };
    take("question_line", t.question_line);
    take("retrieval_instruction", t.retrieval_instruction);
    take("passage_line", t.passage_line);
    take("reader_instruction", t.reader_instruction);
    take("closed_book_instruction", t.closed_book_instruction);
    take("reconstruction_instruction", t.reconstruction_instruction);

    auto require = [](const std::string& field, std::string_view placeholder, const char* key) {
        if (field.find(placeholder) == std::string::npos) {
            throw ConfigError(std::string("prompt template: ") + key + " must contain " + std::string(placeholder));
        }
    };
    require(t.question_line, "{question}", "question_line");
    require(t.retrieval_instruction, "{m}", "retrieval_instruction");
    require(t.passage_line, "{text}", "passage_line");
    return t;
}

// Keeps the line structure intact: newlines inside user text become spaces.
std::string one_line(std::string_view s)
{
    std::string out(trim(s));
    for (auto& c : out) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return out;
}

std::string question_line(const PromptTemplate& t, std::string_view question)
{
    return replace_all(t.question_line, "{question}", one_line(question));
}

std::string instruction_line(const PromptTemplate& t, int m)
{
    return replace_all(t.retrieval_instruction, "{m}", std::to_string(m));
}

}  // namespace

const PromptTemplate& PromptTemplate::defaults()
{
    static const PromptTemplate t = parse_template(default_template_json(), nullptr);
    return t;
}

PromptTemplate PromptTemplate::from_json_text(std::string_view json_text)
{
    return parse_template(json_text, &defaults());
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path)
{
    return from_json_text(read_file(path));
}

std::string build_retrieval_prompt(const Question& q, const RetrievalPromptSpec& spec, const PromptTemplate& tmpl)
{
    spec.validate();
    std::string out;
    const auto instruction = instruction_line(tmpl, spec.m);
    for (const auto& demo : spec.demonstrations) {
        out += question_line(tmpl, demo.question_text);
        out += '\n';
        out += instruction;
        out += '\n';
        auto count = std::min<std::size_t>(demo.urls.size(), static_cast<std::size_t>(spec.m));
        for (std::size_t i = 0; i < count; ++i) {
            out += one_line(demo.urls[i]);
            out += '\n';
        }
        out += '\n';
    }
    out += question_line(tmpl, q.text);
    out += '\n';
    out += instruction;
    out += '\n';
    out += spec.url_prefix;
    return out;
}

std::string build_reader_prompt(const Question& q, std::span<const std::string> passages, const PromptTemplate& tmpl)
{
    std::string out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        auto line = replace_all(tmpl.passage_line, "{index}", std::to_string(i + 1));
        out += replace_all(std::move(line), "{text}", one_line(passages[i]));
        out += '\n';
    }
    if (!passages.empty()) {
        out += '\n';
    }
    out += question_line(tmpl, q.text);
    out += '\n';
    out += passages.empty() ? tmpl.closed_book_instruction : tmpl.reader_instruction;
    out += '\n';
    return out;
}

std::string build_reconstruction_prompt(std::string_view excerpt, std::string_view url_prefix,
                                        const PromptTemplate& tmpl)
{
    std::string out = one_line(excerpt);
    out += "\n\n";
    out += tmpl.reconstruction_instruction;
    out += '\n';
    out += url_prefix;
    return out;
}

namespace {

// Uniform integer in [0, bound) by rejection; bound > 0.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
        - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        std::uint64_t x = rng();
        if (x < limit) {
            return x % bound;
        }
    }
}

}  // namespace

std::vector<Demonstration> sample_demonstrations(std::span<const Demonstration> pool, std::size_t d,
                                                 std::uint64_t seed)
{
    if (pool.size() < d) {
        throw ConfigError("few-shot prompting needs " + std::to_string(d) + " demonstrations but only "
                          + std::to_string(pool.size()) + " training questions carry gold URLs");
    }
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::vector<Demonstration> out;
    out.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        auto j = i + bounded(rng, idx.size() - i);
        std::swap(idx[i], idx[j]);
        out.push_back(pool[idx[i]]);
    }
    return out;
}

}  // namespace llmurl
