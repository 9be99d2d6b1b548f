#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmurl/dataset.hpp"
#include "llmurl/eval.hpp"
#include "llmurl/fetch_store.hpp"
#include "llmurl/llm_backend.hpp"
#include "llmurl/prompting.hpp"
#include "llmurl/reader.hpp"

namespace llmurl {

class MissingResults : public Error {
  public:
    using Error::Error;
};

class MissingRanking : public Error {
  public:
    using Error::Error;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown is rethrown after all workers stop; remaining items are skipped.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// One JSON record per question under `<dir>/results/`. Writes go through a
/// temp file and rename, so a record is either absent or complete.
class ResultStore {
  public:
    explicit ResultStore(std::filesystem::path dir);

    /// File name for a question id: the id itself when it is filesystem-safe,
    /// otherwise its sha256.
    static std::string file_name(const std::string& question_id);

    [[nodiscard]] std::filesystem::path record_path(const std::string& question_id) const;
    [[nodiscard]] std::optional<RetrievalResult> load(const std::string& question_id) const;
    void save(const RetrievalResult& r) const;

    /// All records, ordered by dataset index then id.
    [[nodiscard]] std::vector<RetrievalResult> load_all() const;
    [[nodiscard]] std::vector<std::filesystem::path> record_files() const;

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return m_dir; }

  private:
    std::filesystem::path m_dir;
    std::filesystem::path m_results;
};

/// Shared state handed to every stage command.
struct RunContext {
    LlmBackend* backend = nullptr;  // required by retrieve, answer, reconstruct-urls
    Fetcher* fetcher = nullptr;     // required by retrieve, warm-cache
    PromptTemplate prompt_template = PromptTemplate::defaults();
    LlmParams retrieval_llm;
    LlmParams reader_llm;
    std::size_t jobs = 1;
    std::uint64_t seed = 13;
    bool offline = false;
    std::vector<std::string> command_line;
    nlohmann::ordered_json config_snapshot = nlohmann::ordered_json::object();
};

struct ManifestFile {
    std::string path;  // relative to the manifest's directory
    std::string sha256;
};

/// Provenance record written next to every command's output.
struct RunManifest {
    std::string command;
    std::vector<std::string> command_line;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::string backend;
    bool offline = false;
    FetchStats cache;
    std::size_t fetch_network_requests = 0;
    std::size_t llm_network_requests = 0;
    std::chrono::milliseconds elapsed{0};
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
    std::vector<ManifestFile> files;
};

std::string manifest_json(const RunManifest& m);

/// Hashes each path and records it relative to `base`.
std::vector<ManifestFile> hash_files(const std::filesystem::path& base,
                                     const std::vector<std::filesystem::path>& paths);

enum class Shots { zero, few };
std::string_view to_string(Shots s) noexcept;
Shots shots_from_string(std::string_view s);

struct RetrieveOptions {
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> train;  // required for few-shot
    std::filesystem::path out;
    int m = 10;
    Shots shots = Shots::zero;
    std::size_t d = 10;
    bool restrict_to_wikipedia = true;
    /// Stop after this many newly processed questions (simulates an
    /// interrupted run; the remainder is picked up on rerun).
    std::optional<std::size_t> max_new;
    /// When set, prompts with no recorded fixture are appended here as
    /// {prompt_sha256, prompt} lines.
    std::optional<std::filesystem::path> dump_missing;
};

struct StageSummary {
    std::size_t processed = 0;
    std::size_t skipped = 0;  // already complete from an earlier run
    std::size_t failed = 0;   // backend failures recorded in the result
    std::filesystem::path manifest;
};

/// Throws DataError for unreadable datasets, ConfigError for bad options.
StageSummary cmd_retrieve(const RetrieveOptions& options, RunContext& ctx);

/// Attaches the top-n passages to every result. Idempotent. Throws
/// MissingResults when the directory holds no records.
StageSummary cmd_rank(const std::filesystem::path& results_dir, const RankOptions& options, RunContext& ctx);

struct AnswerOptions {
    ReaderOptions reader;
};

/// Throws MissingResults, or MissingRanking for open-book runs over results
/// that have not been ranked.
StageSummary cmd_answer(const std::filesystem::path& results_dir, const AnswerOptions& options, RunContext& ctx);

struct EvalCommandOptions {
    EvalOptions eval;
    /// Defaults to `<results_dir>/eval`.
    std::optional<std::filesystem::path> out;
};

/// Writes report.json, report.csv and manifest.json.
EvalReport cmd_eval(const std::filesystem::path& results_dir, const EvalCommandOptions& options, RunContext& ctx);

struct WarmCacheOptions {
    std::optional<std::filesystem::path> results_dir;  // fetch every fetchable URL in these results
    std::optional<std::filesystem::path> url_list;     // one URL per line
    std::optional<std::filesystem::path> snapshot;     // import a local page listing
    bool restrict_to_wikipedia = true;
};

struct WarmCacheSummary {
    std::size_t urls = 0;
    std::size_t imported = 0;
    FetchStats stats;
};

WarmCacheSummary cmd_warm_cache(ResponseCache& cache, const WarmCacheOptions& options, RunContext& ctx);

/// Reads `input` in `format` and writes normalized JSONL to `out`.
std::size_t cmd_convert_dataset(NativeFormat format, const std::filesystem::path& input,
                                const std::filesystem::path& out, const std::string& id_prefix);

/// `pages` is JSONL {title, text}. Writes `<out>/reconstruction.json` plus a
/// manifest and returns the report.
ReconstructionReport cmd_reconstruct_urls(const std::filesystem::path& pages, const std::filesystem::path& out,
                                          RunContext& ctx);

/// Every fetchable URL across a set of results, first-occurrence order.
std::vector<std::string> fetchable_urls(std::span<const RetrievalResult> results, bool restrict_to_wikipedia);

}  // namespace llmurl
