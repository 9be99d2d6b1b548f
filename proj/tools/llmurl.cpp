// llmurl: retrieve-then-read with URLs generated by a language model.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llmurl/config.hpp"
#include "llmurl/dataset.hpp"
#include "llmurl/fetch_store.hpp"
#include "llmurl/http_client.hpp"
#include "llmurl/llm_backend.hpp"
#include "llmurl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace llmurl;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

struct Globals {
    std::string backend = "fixture";
    bool offline = false;
    std::uint64_t seed = 13;
    std::size_t jobs = 1;
    std::optional<fs::path> config;
    fs::path cache_dir = ".llmurl-cache";
    std::optional<fs::path> fixtures;
    std::optional<fs::path> record_fixtures;
    std::size_t parallelism = 4;
    long long delay_ms = 200;
    long long timeout_s = 30;
    std::optional<std::string> user_agent;
};

// Owns everything a stage command might need; pieces are built lazily.
class Session {
  public:
    Session(const Globals& g, std::vector<std::string> argv) : m_globals(g)
    {
        m_config = load_config(g.config);
        m_ctx.command_line = std::move(argv);
        m_ctx.seed = g.seed;
        m_ctx.jobs = std::max<std::size_t>(1, g.jobs);
        m_ctx.offline = g.offline;
        m_ctx.retrieval_llm = m_config.retrieval_llm;
        m_ctx.reader_llm = m_config.reader_llm;
        if (m_config.template_path) {
            m_ctx.prompt_template = PromptTemplate::load(*m_config.template_path);
        }
        auto snap = m_config.snapshot();
        snap["backend"] = g.backend;
        snap["cache_dir"] = g.cache_dir.string();
        if (g.fixtures) snap["fixtures"] = g.fixtures->string();
        snap["fetch"] = {{"parallelism", g.parallelism}, {"delay_ms", g.delay_ms}, {"timeout_s", g.timeout_s}};
        m_ctx.config_snapshot = snap;
    }

    ~Session()
    {
        if (m_recorder && m_globals.record_fixtures) {
            try {
                FixtureStore merged;
                if (fs::exists(*m_globals.record_fixtures)) {
                    merged = FixtureStore::load(*m_globals.record_fixtures);
                }
                for (const auto& [digest, output] : m_recorder->recorded().entries()) {
                    merged.record_digest(digest, output);
                }
                merged.save(*m_globals.record_fixtures);
            } catch (const std::exception& e) {
                std::cerr << "llmurl: could not save fixtures: " << e.what() << "\n";
            }
        }
    }

    RunContext& with_backend()
    {
        if (m_ctx.backend) {
            return m_ctx;
        }
        if (m_globals.backend == "fixture") {
            if (!m_globals.fixtures) {
                throw ConfigError("--backend fixture needs --fixtures <file.jsonl>");
            }
            m_backend = std::make_unique<FixtureBackend>(FixtureStore::load(*m_globals.fixtures));
        } else if (m_globals.backend == "live") {
            if (m_globals.offline) {
                throw ConfigError("--offline cannot be combined with --backend live");
            }
            if (m_config.endpoint.api_key.empty()) {
                throw ConfigError("live backend needs an API key (LLMURL_API_KEY)");
            }
            m_backend = std::make_unique<LiveBackend>(m_config.endpoint, std::make_shared<NetworkHttpClient>());
        } else {
            throw ConfigError("--backend must be 'live' or 'fixture'");
        }
        m_ctx.backend = m_backend.get();
        if (m_globals.record_fixtures) {
            m_recorder = std::make_unique<RecordingBackend>(*m_backend);
            m_ctx.backend = m_recorder.get();
        }
        return m_ctx;
    }

    RunContext& with_fetcher()
    {
        if (m_ctx.fetcher) {
            return m_ctx;
        }
        m_cache = std::make_unique<ResponseCache>(m_globals.cache_dir);
        FetchPolicy policy;
        policy.parallelism = std::max<std::size_t>(1, m_globals.parallelism);
        policy.delay = std::chrono::milliseconds(m_globals.delay_ms);
        policy.timeout = std::chrono::seconds(m_globals.timeout_s);
        policy.offline = m_globals.offline;
        if (m_globals.user_agent) {
            policy.user_agent = *m_globals.user_agent;
        } else if (m_config.user_agent) {
            policy.user_agent = *m_config.user_agent;
        }
        if (!m_globals.offline) {
            m_http = std::make_unique<NetworkHttpClient>();
        }
        m_fetcher = std::make_unique<Fetcher>(*m_cache, m_http.get(), policy);
        m_ctx.fetcher = m_fetcher.get();
        return m_ctx;
    }

    RunContext& ctx() { return m_ctx; }
    ResponseCache& cache()
    {
        with_fetcher();
        return *m_cache;
    }

  private:
    const Globals& m_globals;
    AppConfig m_config;
    RunContext m_ctx;
    std::unique_ptr<LlmBackend> m_backend;
    std::unique_ptr<RecordingBackend> m_recorder;
    std::unique_ptr<ResponseCache> m_cache;
    std::unique_ptr<NetworkHttpClient> m_http;
    std::unique_ptr<Fetcher> m_fetcher;
};

int stage_exit(const StageSummary& s, const char* what)
{
    std::cout << what << ": " << s.processed << " processed, " << s.skipped << " skipped, " << s.failed
              << " failed\n";
    if (s.failed > 0) {
        std::cerr << "llmurl: " << s.failed << " backend failures recorded; rerun to retry them\n";
        return kBackend;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Open-domain QA retrieval through language-model-generated Wikipedia URLs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(LLMURL_VERSION));

    Globals g;
    app.add_option("--backend", g.backend, "LLM backend")->check(CLI::IsMember({"live", "fixture"}));
    app.add_flag("--offline", g.offline, "Never touch the network; cache misses are skipped");
    app.add_option("--seed", g.seed, "Seed for demonstration sampling");
    app.add_option("--jobs", g.jobs, "Questions processed in parallel")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--cache", g.cache_dir, "Response cache directory");
    app.add_option("--fixtures", g.fixtures, "Recorded completions (JSONL) for the fixture backend");
    app.add_option("--record-fixtures", g.record_fixtures, "Append completions from this run to a fixture file");
    app.add_option("--parallelism", g.parallelism, "Concurrent fetches")->check(CLI::PositiveNumber);
    app.add_option("--delay-ms", g.delay_ms, "Minimum delay between requests to one host");
    app.add_option("--timeout-s", g.timeout_s, "Per-request fetch timeout");
    app.add_option("--user-agent", g.user_agent, "User-Agent sent by the fetcher");

    // retrieve
    RetrieveOptions ro;
    std::string shots = "zero";
    bool no_restrict = false;
    std::optional<std::size_t> limit;
    auto* retrieve = app.add_subcommand("retrieve", "Generate URLs per question and fetch their pages");
    retrieve->add_option("--dataset", ro.dataset, "Dataset JSONL")->required();
    retrieve->add_option("--out", ro.out, "Results directory")->required();
    retrieve->add_option("--train", ro.train, "Training split with gold_urls (few-shot)");
    retrieve->add_option("--m", ro.m, "URLs requested per question")->check(CLI::PositiveNumber);
    retrieve->add_option("--shots", shots, "zero or few")->check(CLI::IsMember({"zero", "few"}));
    retrieve->add_option("--d", ro.d, "Demonstrations in few-shot prompts")->check(CLI::PositiveNumber);
    retrieve->add_flag("--no-restrict", no_restrict, "Also fetch non-Wikipedia URLs");
    retrieve->add_option("--limit", limit, "Process at most this many new questions");
    retrieve->add_option("--dump-missing", ro.dump_missing, "Write prompts lacking fixtures to this JSONL file");

    // rank
    fs::path rank_dir;
    RankOptions rank_opts;
    auto* rank = app.add_subcommand("rank", "Chunk fetched pages and keep the top BM25 passages");
    rank->add_option("results", rank_dir, "Results directory")->required();
    rank->add_option("--top-n", rank_opts.top_n, "Passages kept per question")->check(CLI::PositiveNumber);
    rank->add_option("--chunk-size", rank_opts.chunk_size, "Words per passage")->check(CLI::PositiveNumber);
    rank->add_option("--bm25-k1", rank_opts.bm25.k1, "BM25 term saturation")->check(CLI::NonNegativeNumber);
    rank->add_option("--bm25-b", rank_opts.bm25.b, "BM25 length normalization")->check(CLI::Range(0.0, 1.0));

    // answer
    fs::path answer_dir;
    AnswerOptions answer_opts;
    auto* answer = app.add_subcommand("answer", "Generate answers from the ranked passages");
    answer->add_option("results", answer_dir, "Results directory")->required();
    answer->add_flag("--closed-book", answer_opts.reader.closed_book, "Answer without passages");
    answer->add_option("--passage-words", answer_opts.reader.passage_word_budget, "Passage word budget")
        ->check(CLI::PositiveNumber);

    // eval
    fs::path eval_dir;
    EvalCommandOptions eval_opts;
    std::optional<fs::path> entity_list;
    std::optional<fs::path> eval_out;
    auto* eval = app.add_subcommand("eval", "Compute recall@k, EM and optional analyses");
    eval->add_option("results", eval_dir, "Results directory")->required();
    eval->add_option("--out", eval_out, "Report directory (default <results>/eval)");
    eval->add_option("--name", eval_opts.eval.dataset_name, "Dataset name in the report");
    eval->add_option("--ks", eval_opts.eval.ks, "Cutoffs k")->delimiter(',')->check(CLI::PositiveNumber);
    eval->add_flag("--sweep-m", eval_opts.eval.sweep_m, "Recall as a function of generated URLs m");
    eval->add_option("--sweep-k", eval_opts.eval.sweep_k, "k used by --sweep-m")->check(CLI::PositiveNumber);
    eval->add_option("--m-max", eval_opts.eval.m_max, "Largest m in the sweep")->check(CLI::PositiveNumber);
    eval->add_flag("--valid-rate", eval_opts.eval.valid_rate, "Share of valid, existing Wikipedia URLs");
    auto* split_opt = eval->add_option("--entity-split", entity_list, "Entity frequency list for common/uncommon");
    eval->add_option("--entity-list", entity_list, "Alias of --entity-split")->excludes(split_opt);
    eval->add_option("--entity-cutoff", eval_opts.eval.entity_cutoff, "Rank cutoff for common entities");

    // warm-cache
    WarmCacheOptions warm_opts;
    bool warm_no_restrict = false;
    auto* warm = app.add_subcommand("warm-cache", "Populate the response cache");
    warm->add_option("--results", warm_opts.results_dir, "Fetch every URL in a results directory");
    warm->add_option("--urls", warm_opts.url_list, "Fetch URLs listed one per line");
    warm->add_option("--import", warm_opts.snapshot, "Import a page snapshot listing (JSONL)");
    warm->add_flag("--no-restrict", warm_no_restrict, "Also fetch non-Wikipedia URLs");

    // convert-dataset
    std::string conv_format;
    fs::path conv_in, conv_out;
    std::string conv_prefix;
    auto* convert = app.add_subcommand("convert-dataset", "Convert a public dataset to JSONL records");
    convert->add_option("--format", conv_format, "webq, nq, triviaqa or dpr")
        ->required()
        ->check(CLI::IsMember({"webq", "nq", "triviaqa", "dpr"}));
    convert->add_option("--input", conv_in, "Native dataset file")->required();
    convert->add_option("--out", conv_out, "Output JSONL")->required();
    convert->add_option("--id-prefix", conv_prefix, "Prefix for generated ids");

    // reconstruct-urls
    fs::path pages_path, recon_out;
    auto* recon = app.add_subcommand("reconstruct-urls", "Ask the model for the URL of known page excerpts");
    recon->add_option("--pages", pages_path, "JSONL {title, text}")->required();
    recon->add_option("--out", recon_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    std::vector<std::string> cmdline(argv, argv + argc);
    try {
        if (*convert) {
            const auto n = cmd_convert_dataset(native_format_from_string(conv_format), conv_in, conv_out,
                                               conv_prefix.empty() ? conv_format : conv_prefix);
            std::cout << "convert-dataset: " << n << " records -> " << conv_out.string() << "\n";
            return kOk;
        }

        Session session(g, cmdline);
        if (*retrieve) {
            ro.shots = shots_from_string(shots);
            ro.restrict_to_wikipedia = !no_restrict;
            ro.max_new = limit;
            session.with_backend();
            return stage_exit(cmd_retrieve(ro, session.with_fetcher()), "retrieve");
        }
        if (*rank) {
            return stage_exit(cmd_rank(rank_dir, rank_opts, session.ctx()), "rank");
        }
        if (*answer) {
            return stage_exit(cmd_answer(answer_dir, answer_opts, session.with_backend()), "answer");
        }
        if (*eval) {
            if (entity_list) {
                eval_opts.eval.entity_list = load_entity_list(*entity_list);
            }
            eval_opts.out = eval_out;
            const auto report = cmd_eval(eval_dir, eval_opts, session.ctx());
            std::cout << report_csv(report);
            return kOk;
        }
        if (*warm) {
            warm_opts.restrict_to_wikipedia = !warm_no_restrict;
            auto& ctx = session.with_fetcher();
            const auto s = cmd_warm_cache(session.cache(), warm_opts, ctx);
            std::cout << "warm-cache: " << s.imported << " imported, " << s.urls << " urls, "
                      << s.stats.cache_hits << " hits, " << s.stats.cache_misses << " misses, "
                      << s.stats.network_requests << " network requests\n";
            return kOk;
        }
        if (*recon) {
            const auto r = cmd_reconstruct_urls(pages_path, recon_out, session.with_backend());
            std::cout << "reconstruct-urls: success rate " << format_number(r.success_rate) << " over "
                      << r.pages.size() << " pages\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "llmurl: configuration error: " << e.what() << "\n";
        return kUsage;
    } catch (const BackendError& e) {
        std::cerr << "llmurl: backend failure (" << e.kind() << "): " << e.what() << "\n";
        return kBackend;
    } catch (const Error& e) {
        std::cerr << "llmurl: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "llmurl: unexpected error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
