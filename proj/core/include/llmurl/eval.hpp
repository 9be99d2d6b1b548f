#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmurl/document.hpp"
#include "llmurl/llm_backend.hpp"
#include "llmurl/passages.hpp"
#include "llmurl/prompting.hpp"
#include "llmurl/reader.hpp"
#include "llmurl/url_extract.hpp"

namespace llmurl {

struct RankingInfo {
    std::size_t top_n = kDefaultTopN;
    std::size_t chunk_size = kDefaultChunkSize;
    Bm25Params bm25;
};

/// Everything known about one question after any prefix of the pipeline.
struct RetrievalResult {
    std::size_t index = 0;  // position in the source dataset
    Question question;
    std::string shots = "zero";  // "zero" | "few"
    GenerationRecord generation;
    std::vector<Document> documents;  // fetched URLs, in generation order
    std::optional<RankingInfo> ranking;
    std::vector<RankedPassage> ranked_passages;
    std::optional<AnswerRecord> answer;
    std::optional<std::string> error;  // retrieval-stage failure
};

enum class Level { document, passage };
std::string_view to_string(Level level) noexcept;

class EmptyEvalSet : public Error {
  public:
    EmptyEvalSet() : Error("evaluation set is empty") {}
};

class MissingAnswers : public Error {
  public:
    using Error::Error;
};

class MissingEntityList : public Error {
  public:
    using Error::Error;
};

/// Lowercase, punctuation to spaces, drop whole-word articles (a, an, the),
/// collapse whitespace, trim. Idempotent.
std::string normalize_answer(std::string_view s);

/// Some gold answer, normalized, is a substring of the normalized text.
/// Gold answers that normalize to nothing never match.
bool contains_answer(std::string_view text, std::span<const std::string> gold);

/// Units in evaluation order: ok documents in generation order, or ranked
/// passages in rank order.
std::vector<std::string_view> evaluation_units(const RetrievalResult& r, Level level);

/// The first k units of r contain a gold answer.
bool hit_at_k(const RetrievalResult& r, std::size_t k, Level level);

/// Fraction of questions with a hit in their first k units (hit@k).
/// Throws EmptyEvalSet, ConfigError for k == 0.
double recall_at_k(std::span<const RetrievalResult> results, std::size_t k, Level level);

/// Mean over questions of the share of their first min(k, units) units that
/// contain an answer; questions without units contribute 0.
double unit_rate_at_k(std::span<const RetrievalResult> results, std::size_t k, Level level);

/// Throws MissingAnswers if any result lacks an answer. Failed answers count
/// as misses.
double exact_match(std::span<const RetrievalResult> results);
bool answer_matches(std::string_view prediction, std::span<const std::string> gold);

struct SweepPoint {
    std::size_t m = 0;
    double recall = 0.0;
};

/// Document recall@k when only the first m fetched URLs of each generation
/// are kept, for m = 1..m_max.
std::vector<SweepPoint> recall_vs_m_sweep(std::span<const RetrievalResult> results, std::size_t k,
                                          std::size_t m_max);

/// Per m: (first-m extracted URLs that are valid_wikipedia and fetched ok)
/// divided by m * questions.
std::map<std::size_t, double> valid_url_rate(std::span<const RetrievalResult> results,
                                             std::span<const std::size_t> ms);

struct EntityList {
    std::vector<std::string> titles;  // rank order
    std::string sha256;
    std::string path;
};

/// One title per line. Throws MissingEntityList if the file does not exist.
EntityList load_entity_list(const std::filesystem::path& path);

struct EntitySplit {
    std::vector<std::size_t> common;  // indices into the question list
    std::vector<std::size_t> uncommon;
};

inline constexpr std::size_t kDefaultEntityCutoff = 1'000'000;

/// A question is common when a gold answer equals (after normalize_answer,
/// underscores read as spaces) one of the first `cutoff` titles.
EntitySplit entity_frequency_split(std::span<const Question> questions, const EntityList& entities,
                                   std::size_t cutoff = kDefaultEntityCutoff);

struct PageExcerpt {
    std::string title;
    std::string text;
};

struct ReconstructionRecord {
    std::string title;
    std::string generated_url;  // first extracted URL, normalized; empty if none
    bool success = false;
    std::optional<std::string> error;
};

struct ReconstructionReport {
    std::vector<ReconstructionRecord> pages;
    double success_rate = 0.0;
};

inline constexpr std::size_t kReconstructionWords = 100;

/// Prompts with each page's first 100 words and checks whether the generated
/// URL names the page. Backend failures count as misses and are recorded.
ReconstructionReport url_reconstruction_eval(std::span<const PageExcerpt> pages, LlmBackend& backend,
                                             const LlmParams& params,
                                             const PromptTemplate& tmpl = PromptTemplate::defaults(),
                                             std::string_view url_prefix = kDefaultUrlPrefix);

// ---- reports ----

struct EvalOptions {
    std::string dataset_name = "dataset";
    std::vector<std::size_t> ks{1, 10, 100};
    bool sweep_m = false;
    std::size_t sweep_k = 1;
    std::size_t m_max = 10;
    bool valid_rate = false;
    std::optional<EntityList> entity_list;
    std::size_t entity_cutoff = kDefaultEntityCutoff;
};

/// One line of the flat table: dataset, level, k, value, mode, m, subset.
struct MetricRow {
    std::string level;  // document | passage | answer | url
    std::optional<std::size_t> k;
    double value = 0.0;
    std::string mode;  // hit | unit_rate | em | valid_rate
    std::optional<std::size_t> m;
    std::string subset = "all";
};

struct QuestionRow {
    std::string id;
    std::string subset;  // empty unless an entity split ran
    std::size_t urls = 0;
    std::size_t valid_urls = 0;
    std::size_t ok_documents = 0;
    std::size_t ranked_passages = 0;
    std::map<std::size_t, bool> document_hit;
    std::map<std::size_t, bool> passage_hit;
    std::optional<std::string> answer;
    std::optional<bool> exact_match;
};

struct EvalReport {
    std::string dataset_name;
    std::size_t n_questions = 0;
    std::map<Level, std::map<std::size_t, double>> recall_at;
    std::map<Level, std::map<std::size_t, double>> unit_rate_at;
    std::optional<double> em;
    std::map<std::size_t, double> valid_url_rate_by_m;
    std::vector<SweepPoint> sweep;
    std::size_t sweep_k = 0;
    std::optional<std::string> entity_list_sha256;
    std::map<std::string, std::map<Level, std::map<std::size_t, double>>> subset_recall;
    std::vector<MetricRow> rows;
    std::vector<QuestionRow> per_question;
    std::string manifest = "manifest.json";
};

/// Passage metrics require every result to be ranked, EM requires every
/// result to carry an answer. Throws EmptyEvalSet, MissingAnswers.
EvalReport build_report(std::span<const RetrievalResult> results, const EvalOptions& options);

std::string report_json(const EvalReport& report);
std::string report_csv(const EvalReport& report);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace llmurl
