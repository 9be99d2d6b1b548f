#include "llmurl/reader.hpp"

#include "llmurl/text_util.hpp"

namespace llmurl {

std::string_view to_string(AnswerMode mode) noexcept
{
    return mode == AnswerMode::open_book ? "open_book" : "closed_book";
}

AnswerMode answer_mode_from_string(std::string_view s)
{
    if (s == "open_book") return AnswerMode::open_book;
    if (s == "closed_book") return AnswerMode::closed_book;
    throw DataError("unknown answer mode: " + std::string(s));
}

namespace {

constexpr std::string_view kQuotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98",
                                        "\xE2\x80\x99"};

bool strip_quote_prefix(std::string_view& s)
{
    for (auto q : kQuotes) {
        if (s.size() >= q.size() && s.substr(0, q.size()) == q) {
            s.remove_prefix(q.size());
            return true;
        }
    }
    return false;
}

bool strip_quote_suffix(std::string_view& s)
{
    for (auto q : kQuotes) {
        if (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) {
            s.remove_suffix(q.size());
            return true;
        }
    }
    return false;
}

}  // namespace

std::string clean_answer(std::string_view raw)
{
    constexpr std::string_view label = "answer:";
    auto settle = [&](std::string_view s) {
        for (;;) {
            auto before = s.size();
            s = trim(s);
            while (strip_quote_prefix(s) || strip_quote_suffix(s)) {
                s = trim(s);
            }
            if (istarts_with(s, label)) {
                s.remove_prefix(label.size());
            }
            if (s.size() == before) {
                return s;
            }
        }
    };
    // A bare "Answer:" line followed by the answer is common, so labels are
    // removed before cutting at the first line break.
    std::string_view s = trim(raw);
    while (istarts_with(s, label)) {
        s = trim(s.substr(label.size()));
    }
    if (auto nl = s.find_first_of("\r\n"); nl != std::string_view::npos) {
        s = s.substr(0, nl);
    }
    return std::string(settle(s));
}

std::vector<std::string> select_reader_passages(std::span<const RankedPassage> ranked, const ReaderOptions& options)
{
    std::vector<std::string> texts;
    if (options.closed_book) {
        return texts;
    }
    std::size_t words = 0;
    for (const auto& rp : ranked) {
        words += rp.passage.length;
        if (words > options.passage_word_budget) {
            break;
        }
        texts.push_back(rp.passage.text);
    }
    return texts;
}

AnswerRecord read(const Question& q, std::span<const RankedPassage> ranked, LlmBackend& backend,
                  const LlmParams& params, const ReaderOptions& options, const PromptTemplate& tmpl)
{
    auto passages = select_reader_passages(ranked, options);
    auto prompt = build_reader_prompt(q, passages, tmpl);
    auto completion = backend.complete(prompt, params);

    AnswerRecord rec;
    rec.question_id = q.id;
    rec.raw_generation = completion.output_text;
    rec.answer_text = clean_answer(rec.raw_generation);
    if (rec.answer_text.empty()) {
        // Never leave a non-blank generation without an answer.
        auto first = trim(rec.raw_generation);
        rec.answer_text = std::string(first.substr(0, first.find_first_of("\r\n")));
    }
    rec.passages_used = passages.size();
    rec.mode = passages.empty() ? AnswerMode::closed_book : AnswerMode::open_book;
    return rec;
}

AnswerRecord read_recording_failures(const Question& q, std::span<const RankedPassage> ranked, LlmBackend& backend,
                                     const LlmParams& params, const ReaderOptions& options,
                                     const PromptTemplate& tmpl)
{
    try {
        return read(q, ranked, backend, params, options, tmpl);
    } catch (const BackendError& e) {
        AnswerRecord rec;
        rec.question_id = q.id;
        rec.passages_used = select_reader_passages(ranked, options).size();
        rec.mode = rec.passages_used == 0 ? AnswerMode::closed_book : AnswerMode::open_book;
        rec.error = std::string(e.kind()) + ": " + e.what();
        return rec;
    }
}

}  // namespace llmurl
