#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "llmurl/llm_backend.hpp"
#include "llmurl/passages.hpp"
#include "llmurl/prompting.hpp"

namespace llmurl {

enum class AnswerMode { open_book, closed_book };
std::string_view to_string(AnswerMode mode) noexcept;
AnswerMode answer_mode_from_string(std::string_view s);

struct AnswerRecord {
    std::string question_id;
    std::string raw_generation;
    std::string answer_text;
    std::size_t passages_used = 0;
    AnswerMode mode = AnswerMode::closed_book;
    /// Set when the backend failed; the record is then a placeholder.
    std::optional<std::string> error;
};

struct ReaderOptions {
    bool closed_book = false;
    /// Words of passage text allowed in the prompt; lowest-ranked passages
    /// are dropped first until the block fits.
    std::size_t passage_word_budget = 3000;
};

/// First line of the generation (after leading whitespace), with surrounding
/// whitespace and quotes trimmed and any leading "Answer:" labels removed.
/// Idempotent.
std::string clean_answer(std::string_view raw_generation);

/// The passage texts the reader prompt will include, honoring the budget.
std::vector<std::string> select_reader_passages(std::span<const RankedPassage> ranked, const ReaderOptions& options);

/// Throws whatever the backend throws.
AnswerRecord read(const Question& q, std::span<const RankedPassage> ranked, LlmBackend& backend,
                  const LlmParams& params, const ReaderOptions& options = {},
                  const PromptTemplate& tmpl = PromptTemplate::defaults());

/// Batch form: backend failures become an AnswerRecord carrying `error`.
AnswerRecord read_recording_failures(const Question& q, std::span<const RankedPassage> ranked, LlmBackend& backend,
                                     const LlmParams& params, const ReaderOptions& options = {},
                                     const PromptTemplate& tmpl = PromptTemplate::defaults());

}  // namespace llmurl
