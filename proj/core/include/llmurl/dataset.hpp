#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmurl/prompting.hpp"

namespace llmurl {

/// One line of a dataset file:
///   {"id": "...", "question": "...", "answers": [...], "gold_urls": [...]}
/// gold_urls is optional and only meaningful for training splits.
struct DatasetRecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::optional<std::vector<std::string>> gold_urls;

    [[nodiscard]] Question to_question() const;
};

/// Parses newline-delimited records. Throws DataError (with line number) on
/// malformed JSON, missing fields, empty answers, or duplicate ids.
std::vector<DatasetRecord> parse_dataset(std::string_view jsonl, std::string_view source_name = "dataset");
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

std::string dataset_record_json(const DatasetRecord& r);
void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records);

/// Training questions usable as demonstrations: those with at least one
/// syntactically valid gold URL.
std::vector<Demonstration> demonstration_pool(std::span<const DatasetRecord> train);

enum class NativeFormat { webq, nq, triviaqa, dpr };
NativeFormat native_format_from_string(std::string_view s);

/// Converters for the public datasets' distribution formats:
///  - webq:     WebQuestions JSON array {utterance, targetValue "(list (description X) ...)"}
///  - nq:       NQ-open JSONL {question, answer: [...]}
///  - triviaqa: TriviaQA JSON {Data: [{QuestionId, Question, Answer: {Value, Aliases}}]}
///  - dpr:      DPR retriever JSON [{question, answers, positive_ctxs: [{title}]}];
///              positive context titles become gold_urls
/// `id_prefix` is prepended to generated ids.
std::vector<DatasetRecord> convert_dataset(NativeFormat format, std::string_view contents,
                                           std::string_view id_prefix);

/// Wikipedia article URL for a page title ("Collective noun" ->
/// https://en.wikipedia.org/wiki/Collective_noun).
std::string title_to_wikipedia_url(std::string_view title);

}  // namespace llmurl
