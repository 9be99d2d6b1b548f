#include "test_support.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "llmurl/dataset.hpp"
#include "llmurl/prompting.hpp"
#include "llmurl/text_util.hpp"

namespace llmurl::testkit {

namespace fs = std::filesystem;
using Rational = boost::multiprecision::cpp_rational;

TempDir::TempDir()
{
    static std::atomic<int> counter{0};
    std::random_device rd;
    m_path = fs::temp_directory_path() /
             ("llmurl-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(m_path);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(m_path, ec);
}

fs::path fixture_dir()
{
    return fs::path(LLMURL_TEST_FIXTURES);
}

Document ok_document(const std::string& url, const std::string& text)
{
    Document d;
    d.url = url;
    d.fetch_status = FetchStatus::ok;
    d.text = text;
    d.word_count = split_words(text).size();
    return d;
}

Document failed_document(const std::string& url, FetchStatus status)
{
    Document d;
    d.url = url;
    d.fetch_status = status;
    return d;
}

// ---- BM25 oracle ----

std::vector<OraclePassage> oracle_passages(const std::vector<Document>& docs, std::size_t chunk_size)
{
    std::vector<OraclePassage> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (docs[d].fetch_status != FetchStatus::ok || !docs[d].text) {
            continue;
        }
        std::istringstream in(*docs[d].text);
        std::vector<std::string> words;
        for (std::string w; in >> w;) {
            words.push_back(w);
        }
        for (std::size_t start = 0, idx = 0; start < words.size(); start += chunk_size, ++idx) {
            OraclePassage p;
            p.doc = d;
            p.index = idx;
            for (std::size_t i = start; i < words.size() && i < start + chunk_size; ++i) {
                p.words.push_back(words[i]);
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<long double> oracle_scores(const std::vector<std::string>& query,
                                       const std::vector<OraclePassage>& passages, double k1, double b)
{
    const std::size_t n = passages.size();
    Rational total = 0;
    for (const auto& p : passages) {
        total += static_cast<long long>(p.words.size());
    }
    const Rational avgdl = total / static_cast<long long>(n);
    const Rational rk1(k1);
    const Rational rb(b);

    // distinct terms, each counted once however often it is repeated
    std::vector<std::string> terms;
    for (const auto& t : query) {
        if (std::find(terms.begin(), terms.end(), t) == terms.end()) {
            terms.push_back(t);
        }
    }

    std::vector<long double> scores(n, 0.0L);
    for (const auto& t : terms) {
        long long df = 0;
        for (const auto& p : passages) {
            if (std::find(p.words.begin(), p.words.end(), t) != p.words.end()) {
                ++df;
            }
        }
        const Rational idf_arg = 1 + (Rational(static_cast<long long>(n)) - df + Rational(1, 2)) / (df + Rational(1, 2));
        const long double idf = std::log(static_cast<long double>(idf_arg));
        for (std::size_t i = 0; i < n; ++i) {
            long long tf = 0;
            for (const auto& w : passages[i].words) {
                tf += (w == t) ? 1 : 0;
            }
            if (tf == 0) {
                continue;  // with k1 = 0 the fraction below would be 0/0
            }
            const Rational len = static_cast<long long>(passages[i].words.size());
            const Rational frac = Rational(tf) * (rk1 + 1) / (Rational(tf) + rk1 * (1 - rb + rb * len / avgdl));
            scores[i] += idf * static_cast<long double>(frac);
        }
    }
    return scores;
}

RandomCorpus random_corpus(std::mt19937_64& rng)
{
    auto uniform = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    RandomCorpus c;
    const std::size_t vocab = uniform(1, 40);
    const std::size_t n_docs = uniform(1, 6);
    c.chunk_size = uniform(1, 12);
    const double k1_choices[] = {0.0, 0.5, 1.2, 2.0, 3.7};
    const double b_choices[] = {0.0, 0.25, 0.75, 1.0};
    c.params.k1 = k1_choices[uniform(0, 4)];
    c.params.b = b_choices[uniform(0, 3)];

    // Skew term choice so df varies widely across terms.
    auto word = [&] {
        const std::size_t a = uniform(0, vocab - 1);
        const std::size_t b = uniform(0, vocab - 1);
        return "t" + std::to_string(std::min(a, b));
    };

    std::size_t passages_left = 50;
    for (std::size_t d = 0; d < n_docs; ++d) {
        const std::size_t roll = uniform(0, 9);
        if (roll == 0) {
            c.docs.push_back(failed_document("https://en.wikipedia.org/wiki/D" + std::to_string(d), FetchStatus::not_found));
            continue;
        }
        const std::size_t max_words = passages_left * c.chunk_size;
        const std::size_t words = std::min(max_words, uniform(roll == 1 ? 0 : 1, 8 * c.chunk_size));
        passages_left -= (words + c.chunk_size - 1) / c.chunk_size;
        std::string text;
        for (std::size_t i = 0; i < words; ++i) {
            text += (i ? (uniform(0, 5) == 0 ? "\n  " : " ") : "") + word();
        }
        c.docs.push_back(ok_document("https://en.wikipedia.org/wiki/D" + std::to_string(d), text));
    }
    auto upper = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
        return s;
    };
    const std::size_t q = uniform(1, 8);
    for (std::size_t i = 0; i < q; ++i) {
        // occasionally a term no passage contains
        std::string t = uniform(0, 7) == 0 ? "zz" + std::to_string(i) : word();
        c.query_terms.push_back(t);
        c.query += (i ? " " : "") + (uniform(0, 3) == 0 ? upper(t) : t);
    }
    return c;
}

// ---- generators ----

std::string random_text(std::mt19937_64& rng, std::size_t words)
{
    static const char* const pool[] = {"jellyfish", "smack", "Cnidaria", "bell", "the", "of", "medusa",
                                       "sea", "polyp", "tentacle", "x", "42", "d\xc3\xa9j\xc3\xa0", "co-op",
                                       "end.", "(note)", "A"};
    static const char* const gaps[] = {" ", " ", " ", "  ", "\n", "\t", " \n\n ", "\r\n"};
    std::uniform_int_distribution<std::size_t> w(0, std::size(pool) - 1);
    std::uniform_int_distribution<std::size_t> g(0, std::size(gaps) - 1);
    std::string out;
    if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
        out += gaps[g(rng)];
    }
    for (std::size_t i = 0; i < words; ++i) {
        if (i) {
            out += gaps[g(rng)];
        }
        out += pool[w(rng)];
    }
    if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
        out += gaps[g(rng)];
    }
    return out;
}

std::string random_valid_url(std::mt19937_64& rng)
{
    auto pick = [&](auto& arr) { return arr[std::uniform_int_distribution<std::size_t>(0, std::size(arr) - 1)(rng)]; };
    auto coin = [&](int one_in) { return std::uniform_int_distribution<int>(0, one_in - 1)(rng) == 0; };
    static const char* const schemes[] = {"https", "http", "HTTPS", "Http"};
    static const char* const hosts[] = {"en.wikipedia.org", "EN.Wikipedia.ORG", "de.wikipedia.org",
                                        "example.com",      "www.Example.com",  "a-b.c0.net",
                                        "[::1]",            "127.0.0.1"};
    static const char* const segs[] = {"wiki", "Jellyfish", "Smack_(group)", "Collective noun", "caf%C3%A9",
                                       "a.b",  "x,y",       "Q&A",           "~user",           "100%25",
                                       "", "index.html", "O'Brien", "A\xe2\x80\x99s"};
    static const char* const ports[] = {"", "", "", ":443", ":80", ":8080"};
    static const char* const tails[] = {"", "", "", ".", ",", ";", "'", "\"", ".,", "\xe2\x80\x9d"};

    std::string url = std::string(pick(schemes)) + "://" + pick(hosts) + pick(ports);
    const int depth = std::uniform_int_distribution<int>(0, 4)(rng);
    for (int i = 0; i < depth; ++i) {
        url += "/";
        url += pick(segs);
    }
    if (coin(4)) {
        url += "?q=" + std::string(pick(segs));
    }
    if (coin(4)) {
        url += "#frag" + std::string(pick(segs));
    }
    url += pick(tails);
    return url;
}

// ---- synthetic evaluation set ----

namespace {

const char* const kGold[] = {"alpha", "bravo", "charlie", "delta", "echo",
                             "foxtrot", "golf", "hotel", "india", "juliet"};

std::string wiki(std::size_t q, std::size_t pos)
{
    return "https://en.wikipedia.org/wiki/Q" + std::to_string(q) + "_P" + std::to_string(pos);
}

ExtractedUrl extracted(const std::string& url, UrlStatus status)
{
    ExtractedUrl u;
    u.raw = url;
    u.normalized = url;
    u.status = status;
    if (status == UrlStatus::valid_wikipedia) {
        u.title = url.substr(url.rfind('/') + 1);
    }
    return u;
}

RankedPassage passage(std::size_t rank, bool with_answer, const std::string& gold)
{
    RankedPassage p;
    p.passage.doc_index = rank;
    p.passage.passage_index = 0;
    p.passage.text = with_answer ? "words around " + gold + " and more" : "filler words about nothing";
    p.passage.tokens = tokenize(p.passage.text);
    p.passage.length = p.passage.tokens.size();
    p.score = 100.0 - static_cast<double>(rank);
    return p;
}

}  // namespace

std::vector<RetrievalResult> synthetic_eval_set()
{
    struct Row {
        std::set<std::size_t> answer_docs;  // 1-based URL positions
        std::map<std::size_t, FetchStatus> failed;
        std::set<std::size_t> wrong_domain;
        std::size_t n_urls;
        std::size_t n_passages;
        std::set<std::size_t> answer_ranks;  // 1-based
        std::string prediction;
        bool answer_error;
    };
    const Row rows[10] = {
        {{1, 4}, {}, {}, 10, 10, {1}, "Alpha", false},
        {{1, 4}, {}, {}, 10, 10, {3}, "the bravo", false},
        {{1, 4}, {}, {}, 10, 10, {10}, "charlie x", false},
        {{1, 4}, {}, {}, 10, 10, {}, "", true},
        {{1, 4}, {}, {}, 10, 10, {2}, "Echo.", false},
        {{7}, {{9, FetchStatus::transport_error}}, {}, 10, 10, {1}, "FOXTROT", false},
        {{2}, {{1, FetchStatus::not_found}}, {}, 10, 10, {5}, "golfs", false},
        {{}, {}, {3, 5}, 10, 10, {}, "A hotel", false},
        {{10}, {}, {}, 10, 20, {15}, "juliet", false},
        {{}, {}, {}, 0, 0, {}, "Juliet", false},
    };

    std::vector<RetrievalResult> out;
    for (std::size_t q = 0; q < 10; ++q) {
        const Row& row = rows[q];
        const std::string gold = kGold[q];
        RetrievalResult r;
        r.index = q;
        r.question.id = "syn-" + std::to_string(q);
        r.question.text = "Synthetic question number " + std::to_string(q) + "?";
        r.question.gold_answers = {gold};
        r.generation.question_id = r.question.id;
        r.generation.raw_text = q == 9 ? "I am not sure which pages would help." : "(generated list)";
        for (std::size_t pos = 1; pos <= row.n_urls; ++pos) {
            if (row.wrong_domain.count(pos)) {
                r.generation.urls.push_back(
                    extracted("https://example.com/Q" + std::to_string(q) + "_P" + std::to_string(pos),
                              UrlStatus::wrong_domain));
                continue;
            }
            const std::string url = wiki(q, pos);
            r.generation.urls.push_back(extracted(url, UrlStatus::valid_wikipedia));
            if (auto f = row.failed.find(pos); f != row.failed.end()) {
                r.documents.push_back(failed_document(url, f->second));
            } else {
                const std::string text = row.answer_docs.count(pos)
                                             ? "This page mentions " + gold + " in passing."
                                             : "This page is about something else entirely.";
                r.documents.push_back(ok_document(url, text));
            }
        }
        r.ranking = RankingInfo{};
        for (std::size_t rank = 1; rank <= row.n_passages; ++rank) {
            r.ranked_passages.push_back(passage(rank, row.answer_ranks.count(rank) > 0, gold));
        }
        AnswerRecord a;
        a.question_id = r.question.id;
        a.raw_generation = row.prediction;
        a.answer_text = row.prediction;
        a.passages_used = r.ranked_passages.size();
        a.mode = a.passages_used ? AnswerMode::open_book : AnswerMode::closed_book;
        if (row.answer_error) {
            a.error = "timeout: simulated";
        }
        r.answer = a;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace llmurl::testkit

namespace llmurl::testkit {

Completion ScriptedBackend::complete(const std::string& prompt, const LlmParams&)
{
    auto n = ++m_calls;
    if (m_fail_on != 0 && n == m_fail_on) {
        throw TransportError("scripted failure");
    }
    static const std::vector<std::string> pages{"Jellyfish", "Cnidaria",  "Medusozoa", "Scyphozoa",
                                                "Cubozoa",   "Hydrozoa",  "Staurozoa", "Rhizostomeae",
                                                "Collective_noun"};
    Completion c;
    c.prompt_text = prompt;
    c.backend_id = BackendId::fixture;
    if (prompt.size() >= kDefaultUrlPrefix.size()
        && prompt.compare(prompt.size() - kDefaultUrlPrefix.size(), kDefaultUrlPrefix.size(), kDefaultUrlPrefix)
            == 0) {
        auto h = FixtureStore::digest(prompt);
        std::size_t start = std::stoul(h.substr(0, 8), nullptr, 16) % pages.size();
        std::size_t count = 1 + std::stoul(h.substr(8, 2), nullptr, 16) % 4;
        for (std::size_t i = 0; i < count; ++i) {
            if (i > 0) {
                c.output_text += std::string(kDefaultUrlPrefix);
            }
            c.output_text += "/";
            c.output_text += pages[(start + i) % pages.size()];
            c.output_text += "\n";
        }
    } else {
        c.output_text = " jellyfish";
    }
    return c;
}

void write_jellyfish_dataset(const std::filesystem::path& path, std::size_t n)
{
    std::vector<DatasetRecord> rs;
    for (std::size_t i = 0; i < n; ++i) {
        rs.push_back({"q" + std::to_string(i),
                      "Question " + std::to_string(i) + ": which sea creature has a smack of stinging cells?",
                      {"jellyfish"},
                      std::nullopt});
    }
    save_dataset(path, rs);
}

void seed_case_study_cache(ResponseCache& cache)
{
    import_snapshot(cache, fixture_dir() / "case_study" / "snapshot.jsonl");
}

namespace {

FetchPolicy offline_policy()
{
    FetchPolicy p;
    p.offline = true;
    return p;
}

std::size_t manifest_network_requests(const std::filesystem::path& path)
{
    return nlohmann::json::parse(read_file(path)).at("network_requests").at("total").get<std::size_t>();
}

}  // namespace

OfflineRig::OfflineRig(const std::filesystem::path& dir, LlmBackend& backend)
    : cache(dir / "cache"), fetcher(cache, nullptr, offline_policy())
{
    seed_case_study_cache(cache);
    ctx.backend = &backend;
    ctx.fetcher = &fetcher;
    ctx.offline = true;
}

PipelineRun run_scripted_pipeline(const std::filesystem::path& work, const std::filesystem::path& dataset,
                                  std::optional<std::size_t> interrupt_after)
{
    const auto run = work / "run";
    PipelineRun out;
    RetrieveOptions ro;
    ro.dataset = dataset;
    ro.out = run;
    if (interrupt_after) {
        ScriptedBackend first;
        OfflineRig rig(work, first);
        auto partial = ro;
        partial.max_new = *interrupt_after;
        out.network_requests += manifest_network_requests(cmd_retrieve(partial, rig.ctx).manifest);
    }
    ScriptedBackend backend;
    OfflineRig rig(work, backend);
    out.network_requests += manifest_network_requests(cmd_retrieve(ro, rig.ctx).manifest);
    out.network_requests += manifest_network_requests(cmd_rank(run, RankOptions{}, rig.ctx).manifest);
    out.network_requests += manifest_network_requests(cmd_answer(run, AnswerOptions{}, rig.ctx).manifest);
    EvalCommandOptions eo;
    eo.eval.valid_rate = true;
    eo.eval.sweep_m = true;
    cmd_eval(run, eo, rig.ctx);
    out.network_requests += manifest_network_requests(run / "eval" / "manifest.json");
    out.network_requests += rig.fetcher.network_requests() + backend.network_requests();
    out.report_json = read_file(run / "eval" / "report.json");
    return out;
}

CaseStudyOutcome run_case_study(const std::filesystem::path& work)
{
    const auto cs = fixture_dir() / "case_study";
    ResponseCache cache(work / "cache");
    FetchPolicy policy;
    policy.offline = true;
    Fetcher fetcher(cache, nullptr, policy);
    FixtureBackend backend(FixtureStore::load(cs / "llm_fixtures.jsonl"));

    RunContext ctx;
    ctx.backend = &backend;
    ctx.fetcher = &fetcher;
    ctx.offline = true;

    WarmCacheOptions warm;
    warm.snapshot = cs / "snapshot.jsonl";
    cmd_warm_cache(cache, warm, ctx);

    CaseStudyOutcome out;
    out.run_dir = work / "run";
    RetrieveOptions ro;
    ro.dataset = cs / "question.jsonl";
    ro.out = out.run_dir;
    auto retr = cmd_retrieve(ro, ctx);
    cmd_rank(out.run_dir, RankOptions{}, ctx);
    cmd_answer(out.run_dir, AnswerOptions{}, ctx);
    EvalCommandOptions eo;
    eo.eval.dataset_name = "case-study";
    eo.eval.ks = {1, 10};
    eo.eval.valid_rate = true;
    out.report = cmd_eval(out.run_dir, eo, ctx);

    out.result = ResultStore(out.run_dir).load_all().at(0);
    out.retrieve_manifest = nlohmann::json::parse(read_file(retr.manifest));
    out.eval_manifest = nlohmann::json::parse(read_file(out.run_dir / "eval" / "manifest.json"));
    out.fetch_network_requests = fetcher.network_requests();
    out.llm_network_requests = backend.network_requests();
    out.cache_hits = fetcher.stats().cache_hits;
    return out;
}

}  // namespace llmurl::testkit

namespace llmurl::testkit {

std::vector<ExtractionCase> load_extraction_suite()
{
    const auto j = nlohmann::json::parse(read_file(fixture_dir() / "extraction" / "suite.json"));
    std::vector<ExtractionCase> out;
    for (const auto& c : j) {
        ExtractionCase ec;
        ec.name = c.at("name").get<std::string>();
        ec.generation = c.at("generation").get<std::string>();
        for (const auto& e : c.at("expected")) {
            ExtractedUrl u;
            u.raw = e.at("raw").get<std::string>();
            u.normalized = e.at("normalized").get<std::string>();
            u.status = url_status_from_string(e.at("status").get<std::string>());
            if (e.contains("title")) {
                u.title = e.at("title").get<std::string>();
            }
            ec.expected.push_back(std::move(u));
        }
        out.push_back(std::move(ec));
    }
    return out;
}

std::string describe_mismatch(const ExtractionCase& c, const std::vector<ExtractedUrl>& actual)
{
    if (actual == c.expected) {
        return {};
    }
    auto show = [](const std::vector<ExtractedUrl>& us) {
        std::string s;
        for (const auto& u : us) {
            s += "  {" + u.raw + " | " + u.normalized + " | " + std::string(to_string(u.status)) + " | "
                + u.title.value_or("-") + "}\n";
        }
        return s.empty() ? std::string("  (none)\n") : s;
    };
    return c.name + ": expected\n" + show(c.expected) + "got\n" + show(actual);
}

}  // namespace llmurl::testkit
