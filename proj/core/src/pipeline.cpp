#include "llmurl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "llmurl/hashing.hpp"
#include "llmurl/serialization.hpp"
#include "llmurl/text_util.hpp"

#ifndef LLMURL_VERSION
#define LLMURL_VERSION "0.0.0"
#endif

namespace llmurl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_lock;
    {
        std::vector<std::jthread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                while (!stop.load()) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) {
                        return;
                    }
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lk(error_lock);
                        if (!first_error) {
                            first_error = std::current_exception();
                        }
                        stop = true;
                    }
                }
            });
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

// ---- result store ----

ResultStore::ResultStore(fs::path dir) : m_dir(std::move(dir)), m_results(m_dir / "results") {}

std::string ResultStore::file_name(const std::string& question_id)
{
    const bool safe = !question_id.empty() && question_id.size() <= 128 && question_id.front() != '.' &&
                      std::all_of(question_id.begin(), question_id.end(), [](char c) {
                          return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                                 c == '-' || c == '_' || c == '.';
                      });
    return (safe ? question_id : sha256_hex(question_id)) + ".json";
}

fs::path ResultStore::record_path(const std::string& question_id) const
{
    return m_results / file_name(question_id);
}

std::optional<RetrievalResult> ResultStore::load(const std::string& question_id) const
{
    const fs::path p = record_path(question_id);
    if (!fs::exists(p)) {
        return std::nullopt;
    }
    return parse_result_text(read_file(p), p.string());
}

void ResultStore::save(const RetrievalResult& r) const
{
    fs::create_directories(m_results);
    write_file_atomic(record_path(r.question.id), result_text(r));
}

std::vector<fs::path> ResultStore::record_files() const
{
    std::vector<fs::path> files;
    if (!fs::is_directory(m_results)) {
        return files;
    }
    for (const auto& e : fs::directory_iterator(m_results)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<RetrievalResult> ResultStore::load_all() const
{
    std::vector<RetrievalResult> out;
    for (const auto& p : record_files()) {
        out.push_back(parse_result_text(read_file(p), p.string()));
    }
    std::sort(out.begin(), out.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
        return a.index != b.index ? a.index < b.index : a.question.id < b.question.id;
    });
    return out;
}

// ---- manifests ----

std::vector<ManifestFile> hash_files(const fs::path& base, const std::vector<fs::path>& paths)
{
    std::vector<ManifestFile> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        out.push_back({fs::relative(p, base).generic_string(), sha256_file(p)});
    }
    return out;
}

std::string manifest_json(const RunManifest& m)
{
    ojson files = ojson::array();
    for (const auto& f : m.files) {
        files.push_back({{"path", f.path}, {"sha256", f.sha256}});
    }
    ojson j{{"tool", "llmurl"},
            {"version", LLMURL_VERSION},
            {"command", m.command},
            {"command_line", m.command_line},
            {"config", m.config},
            {"seed", m.seed},
            {"backend", m.backend},
            {"offline", m.offline},
            {"cache", {{"hits", m.cache.cache_hits},
                       {"misses", m.cache.cache_misses},
                       {"skipped_urls", m.cache.skipped_urls}}},
            {"network_requests", {{"fetch", m.fetch_network_requests},
                                  {"llm", m.llm_network_requests},
                                  {"total", m.fetch_network_requests + m.llm_network_requests}}},
            {"elapsed_ms", m.elapsed.count()},
            {"finished_at", format_utc(unix_now())}};
    if (!m.extra.empty()) {
        j["details"] = m.extra;
    }
    j["files"] = files;
    return j.dump(2) + "\n";
}

namespace {

using Clock = std::chrono::steady_clock;

RunManifest start_manifest(std::string command, const RunContext& ctx)
{
    RunManifest m;
    m.command = std::move(command);
    m.command_line = ctx.command_line;
    m.config = ctx.config_snapshot;
    m.seed = ctx.seed;
    m.backend = ctx.backend ? std::string(to_string(ctx.backend->id())) : std::string("none");
    m.offline = ctx.offline;
    return m;
}

void finish_manifest(RunManifest& m, const RunContext& ctx, Clock::time_point started)
{
    if (ctx.fetcher) {
        m.cache = ctx.fetcher->stats();
        m.fetch_network_requests = ctx.fetcher->network_requests();
    }
    if (ctx.backend) {
        m.llm_network_requests = ctx.backend->network_requests();
    }
    m.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
}

fs::path write_stage_manifest(const ResultStore& store, RunManifest& m)
{
    m.files = hash_files(store.dir(), store.record_files());
    const fs::path p = store.dir() / "manifests" / (m.command + ".json");
    fs::create_directories(p.parent_path());
    write_file_atomic(p, manifest_json(m));
    return p;
}

std::vector<RetrievalResult> require_results(const ResultStore& store)
{
    auto results = store.load_all();
    if (results.empty()) {
        throw MissingResults("no results under " + (store.dir() / "results").string());
    }
    return results;
}

template <typename T>
T& require(T* p, const char* what)
{
    if (p == nullptr) {
        throw ConfigError(std::string("internal: ") + what + " not configured");
    }
    return *p;
}

}  // namespace

std::string_view to_string(Shots s) noexcept
{
    return s == Shots::few ? "few" : "zero";
}

Shots shots_from_string(std::string_view s)
{
    if (s == "zero") return Shots::zero;
    if (s == "few") return Shots::few;
    throw ConfigError("shots must be 'zero' or 'few', got '" + std::string(s) + "'");
}

std::vector<std::string> fetchable_urls(std::span<const RetrievalResult> results, bool restrict_to_wikipedia)
{
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : results) {
        for (const auto& u : r.generation.urls) {
            if (is_fetchable(u.status, restrict_to_wikipedia) && seen.insert(u.normalized).second) {
                out.push_back(u.normalized);
            }
        }
    }
    return out;
}

// ---- retrieve ----

StageSummary cmd_retrieve(const RetrieveOptions& options, RunContext& ctx)
{
    const auto started = Clock::now();
    LlmBackend& backend = require(ctx.backend, "backend");
    Fetcher& fetcher = require(ctx.fetcher, "fetcher");

    const auto records = load_dataset(options.dataset);
    RetrievalPromptSpec spec;
    spec.m = options.m;
    std::vector<Demonstration> demos;
    if (options.shots == Shots::few) {
        if (!options.train) {
            throw ConfigError("few-shot retrieval needs a training split (--train)");
        }
        const auto pool = demonstration_pool(load_dataset(*options.train));
        demos = sample_demonstrations(pool, options.d, ctx.seed);
        spec.demonstrations = demos;
    }
    spec.validate();

    const ResultStore store(options.out);
    StageSummary summary;

    // Completed records are skipped; those with a recorded failure are retried.
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto existing = store.load(records[i].id);
        if (existing && !existing->error) {
            ++summary.skipped;
        } else {
            pending.push_back(i);
        }
    }
    if (options.max_new && pending.size() > *options.max_new) {
        pending.resize(*options.max_new);
    }

    std::mutex dump_lock;
    std::atomic<std::size_t> failed{0};
    parallel_for(pending.size(), ctx.jobs, [&](std::size_t p) {
        const std::size_t i = pending[p];
        RetrievalResult r;
        r.index = i;
        r.question = records[i].to_question();
        r.shots = std::string(to_string(options.shots));
        r.generation.question_id = r.question.id;

        const std::string prompt = build_retrieval_prompt(r.question, spec, ctx.prompt_template);
        try {
            const Completion c = backend.complete(prompt, ctx.retrieval_llm);
            r.generation.raw_text = c.output_text;
            r.generation.urls = extract_urls(reattach_url_prefix(spec.url_prefix, c.output_text));
        } catch (const BackendError& e) {
            r.error = std::string(e.kind()) + ": " + e.what();
            ++failed;
            if (options.dump_missing && dynamic_cast<const MissingFixture*>(&e) != nullptr) {
                std::lock_guard lk(dump_lock);
                std::ofstream out(*options.dump_missing, std::ios::app | std::ios::binary);
                out << nlohmann::json{{"prompt_sha256", FixtureStore::digest(prompt)}, {"prompt", prompt}}.dump()
                    << '\n';
            }
        }
        if (!r.error) {
            std::vector<std::string> urls;
            for (const auto& u : r.generation.urls) {
                if (is_fetchable(u.status, options.restrict_to_wikipedia)) {
                    urls.push_back(u.normalized);
                }
            }
            r.documents = fetcher.fetch_all(urls);
        }
        store.save(r);
    });
    summary.processed = pending.size();
    summary.failed = failed.load();

    RunManifest m = start_manifest("retrieve", ctx);
    ojson demo_questions = ojson::array();
    for (const auto& d : demos) {
        demo_questions.push_back(d.question_text);
    }
    m.extra = {{"dataset", options.dataset.string()},
               {"dataset_sha256", sha256_file(options.dataset)},
               {"m", options.m},
               {"shots", to_string(options.shots)},
               {"d", options.shots == Shots::few ? options.d : 0},
               {"restrict_to_wikipedia", options.restrict_to_wikipedia},
               {"demonstrations", demo_questions},
               {"processed", summary.processed},
               {"skipped", summary.skipped},
               {"failed", summary.failed}};
    finish_manifest(m, ctx, started);
    summary.manifest = write_stage_manifest(store, m);
    return summary;
}

// ---- rank ----

StageSummary cmd_rank(const fs::path& results_dir, const RankOptions& options, RunContext& ctx)
{
    const auto started = Clock::now();
    if (options.top_n == 0 || options.chunk_size == 0) {
        throw ConfigError("top-n and chunk size must be positive");
    }
    const ResultStore store(results_dir);
    auto results = require_results(store);
    parallel_for(results.size(), ctx.jobs, [&](std::size_t i) {
        RetrievalResult& r = results[i];
        r.ranked_passages = rank_top_n(r.question.text, r.documents, options);
        r.ranking = RankingInfo{options.top_n, options.chunk_size, options.bm25};
        store.save(r);
    });
    StageSummary summary;
    summary.processed = results.size();

    RunManifest m = start_manifest("rank", ctx);
    m.extra = {{"top_n", options.top_n},
               {"chunk_size", options.chunk_size},
               {"bm25_k1", options.bm25.k1},
               {"bm25_b", options.bm25.b}};
    finish_manifest(m, ctx, started);
    summary.manifest = write_stage_manifest(store, m);
    return summary;
}

// ---- answer ----

StageSummary cmd_answer(const fs::path& results_dir, const AnswerOptions& options, RunContext& ctx)
{
    const auto started = Clock::now();
    LlmBackend& backend = require(ctx.backend, "backend");
    const ResultStore store(results_dir);
    auto results = require_results(store);
    const bool closed = options.reader.closed_book;
    if (!closed) {
        for (const auto& r : results) {
            if (!r.ranking) {
                throw MissingRanking("result '" + r.question.id + "' has no ranked passages; run rank first");
            }
        }
    }

    auto done = [&](const RetrievalResult& r) {
        if (!r.answer || r.answer->error) {
            return false;
        }
        if (closed) {
            return r.answer->mode == AnswerMode::closed_book;
        }
        return r.answer->mode == AnswerMode::open_book || r.ranked_passages.empty();
    };
    std::vector<std::size_t> pending;
    StageSummary summary;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (done(results[i])) {
            ++summary.skipped;
        } else {
            pending.push_back(i);
        }
    }

    std::atomic<std::size_t> failed{0};
    parallel_for(pending.size(), ctx.jobs, [&](std::size_t p) {
        RetrievalResult& r = results[pending[p]];
        const std::span<const RankedPassage> passages =
            closed ? std::span<const RankedPassage>{} : std::span<const RankedPassage>(r.ranked_passages);
        r.answer = read_recording_failures(r.question, passages, backend, ctx.reader_llm, options.reader,
                                           ctx.prompt_template);
        if (r.answer->error) {
            ++failed;
        }
        store.save(r);
    });
    summary.processed = pending.size();
    summary.failed = failed.load();

    RunManifest m = start_manifest("answer", ctx);
    m.extra = {{"closed_book", closed},
               {"passage_word_budget", options.reader.passage_word_budget},
               {"processed", summary.processed},
               {"skipped", summary.skipped},
               {"failed", summary.failed}};
    finish_manifest(m, ctx, started);
    summary.manifest = write_stage_manifest(store, m);
    return summary;
}

// ---- eval ----

EvalReport cmd_eval(const fs::path& results_dir, const EvalCommandOptions& options, RunContext& ctx)
{
    const auto started = Clock::now();
    const ResultStore store(results_dir);
    const auto results = store.load_all();
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    EvalReport report = build_report(results, options.eval);

    const fs::path out = options.out.value_or(results_dir / "eval");
    fs::create_directories(out);
    const fs::path json_path = out / "report.json";
    const fs::path csv_path = out / "report.csv";
    write_file_atomic(json_path, report_json(report));
    write_file_atomic(csv_path, report_csv(report));

    RunManifest m = start_manifest("eval", ctx);
    ojson inputs = ojson::array();
    for (const auto& f : hash_files(results_dir, store.record_files())) {
        inputs.push_back({{"path", f.path}, {"sha256", f.sha256}});
    }
    m.extra = {{"results_dir", results_dir.string()}, {"inputs", inputs}};
    if (options.eval.entity_list) {
        m.extra["entity_list"] = {{"path", options.eval.entity_list->path},
                                  {"sha256", options.eval.entity_list->sha256}};
    }
    finish_manifest(m, ctx, started);
    m.files = hash_files(out, {json_path, csv_path});
    write_file_atomic(out / report.manifest, manifest_json(m));
    return report;
}

// ---- warm-cache ----

WarmCacheSummary cmd_warm_cache(ResponseCache& cache, const WarmCacheOptions& options, RunContext& ctx)
{
    const auto started = Clock::now();
    WarmCacheSummary summary;
    if (options.snapshot) {
        summary.imported = import_snapshot(cache, *options.snapshot).imported;
    }
    std::vector<std::string> urls;
    if (options.results_dir) {
        const auto results = ResultStore(*options.results_dir).load_all();
        urls = fetchable_urls(results, options.restrict_to_wikipedia);
    }
    if (options.url_list) {
        std::istringstream in(read_file(*options.url_list));
        std::set<std::string> seen(urls.begin(), urls.end());
        for (std::string line; std::getline(in, line);) {
            const auto t = trim(line);
            if (t.empty() || t.front() == '#') {
                continue;
            }
            std::string n;
            try {
                n = normalize_url(t);
            } catch (const InvalidSyntax&) {
                continue;
            }
            if (is_fetchable(classify(n), options.restrict_to_wikipedia) && seen.insert(n).second) {
                urls.push_back(n);
            }
        }
    }
    summary.urls = urls.size();
    if (!urls.empty()) {
        require(ctx.fetcher, "fetcher").fetch_all(urls);
    }
    cache.flush();
    if (ctx.fetcher) {
        summary.stats = ctx.fetcher->stats();
    }

    RunManifest m = start_manifest("warm-cache", ctx);
    m.extra = {{"urls", summary.urls}, {"imported", summary.imported}, {"entries", cache.size()}};
    finish_manifest(m, ctx, started);
    std::vector<fs::path> files{cache.dir() / "manifest.json"};
    m.files = hash_files(cache.dir(), files);
    write_file_atomic(cache.dir() / "warm-cache.manifest.json", manifest_json(m));
    return summary;
}

// ---- convert-dataset ----

std::size_t cmd_convert_dataset(NativeFormat format, const fs::path& input, const fs::path& out,
                                const std::string& id_prefix)
{
    const auto records = convert_dataset(format, read_file(input), id_prefix);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    save_dataset(out, records);
    return records.size();
}

// ---- reconstruct-urls ----

ReconstructionReport cmd_reconstruct_urls(const fs::path& pages_path, const fs::path& out, RunContext& ctx)
{
    const auto started = Clock::now();
    LlmBackend& backend = require(ctx.backend, "backend");
    std::vector<PageExcerpt> pages;
    std::istringstream in(read_file(pages_path));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            pages.push_back({j.at("title").get<std::string>(), j.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw DataError(pages_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (pages.empty()) {
        throw DataError(pages_path.string() + ": no pages");
    }
    ReconstructionReport report = url_reconstruction_eval(pages, backend, ctx.retrieval_llm, ctx.prompt_template);

    ojson recs = ojson::array();
    for (const auto& p : report.pages) {
        ojson r{{"title", p.title}, {"generated_url", p.generated_url}, {"success", p.success}};
        if (p.error) {
            r["error"] = *p.error;
        }
        recs.push_back(r);
    }
    const ojson j{{"pages", report.pages.size()},
                  {"success_rate", report.success_rate},
                  {"records", recs},
                  {"manifest", "manifest.json"}};
    fs::create_directories(out);
    const fs::path report_path = out / "reconstruction.json";
    write_file_atomic(report_path, j.dump(2) + "\n");

    RunManifest m = start_manifest("reconstruct-urls", ctx);
    m.extra = {{"pages", pages_path.string()}, {"pages_sha256", sha256_file(pages_path)}};
    finish_manifest(m, ctx, started);
    m.files = hash_files(out, {report_path});
    write_file_atomic(out / "manifest.json", manifest_json(m));
    return report;
}

}  // namespace llmurl
