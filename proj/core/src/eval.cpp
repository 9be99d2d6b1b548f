#include "llmurl/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "llmurl/hashing.hpp"
#include "llmurl/text_util.hpp"

namespace llmurl {

using json = nlohmann::ordered_json;

std::string_view to_string(Level level) noexcept
{
    return level == Level::document ? "document" : "passage";
}

// ---- answer normalization ----

namespace {

bool is_ascii_punct(unsigned char c)
{
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Length of a UTF-8 punctuation sequence at s[i], or 0.
std::size_t unicode_punct_len(std::string_view s, std::size_t i)
{
    auto at = [&](std::size_t j) { return static_cast<unsigned char>(s[j]); };
    if (i + 1 < s.size() && at(i) == 0xC2) {
        unsigned char c = at(i + 1);
        // « » ¿ ¡ · §
        if (c == 0xAB || c == 0xBB || c == 0xBF || c == 0xA1 || c == 0xB7 || c == 0xA7) {
            return 2;
        }
    }
    if (i + 2 < s.size() && at(i) == 0xE2 && at(i + 1) == 0x80) {
        unsigned char c = at(i + 2);
        // U+2010..U+2027: dashes, curly quotes, bullets, ellipsis
        if (c >= 0x90 && c <= 0xA7) {
            return 3;
        }
    }
    return 0;
}

}  // namespace

std::string normalize_answer(std::string_view s)
{
    std::string spaced;
    spaced.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = static_cast<unsigned char>(s[i]);
        if (auto n = unicode_punct_len(s, i); n > 0) {
            spaced.push_back(' ');
            i += n - 1;
        } else if (is_ascii_punct(c)) {
            spaced.push_back(' ');
        } else if (c >= 'A' && c <= 'Z') {
            spaced.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            spaced.push_back(static_cast<char>(c));
        }
    }
    std::string out;
    for (const auto& w : split_words(spaced)) {
        if (w == "a" || w == "an" || w == "the") {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += w;
    }
    return out;
}

bool contains_answer(std::string_view text, std::span<const std::string> gold)
{
    auto hay = normalize_answer(text);
    return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) {
        auto needle = normalize_answer(g);
        return !needle.empty() && hay.find(needle) != std::string::npos;
    });
}

bool answer_matches(std::string_view prediction, std::span<const std::string> gold)
{
    auto p = normalize_answer(prediction);
    return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) { return normalize_answer(g) == p; });
}

// ---- recall ----

std::vector<std::string_view> evaluation_units(const RetrievalResult& r, Level level)
{
    std::vector<std::string_view> units;
    if (level == Level::document) {
        for (const auto& d : r.documents) {
            if (d.ok() && d.text) {
                units.emplace_back(*d.text);
            }
        }
    } else {
        for (const auto& rp : r.ranked_passages) {
            units.emplace_back(rp.passage.text);
        }
    }
    return units;
}

namespace {

// Hit flags of the first k units (ok documents or ranked passages).
std::vector<bool> unit_hits(const RetrievalResult& r, std::size_t k, Level level)
{
    auto units = evaluation_units(r, level);
    units.resize(std::min(units.size(), k));
    std::vector<bool> hits;
    hits.reserve(units.size());
    for (auto u : units) {
        hits.push_back(contains_answer(u, r.question.gold_answers));
    }
    return hits;
}

void require_k(std::size_t k)
{
    if (k == 0) {
        throw ConfigError("recall cutoff k must be >= 1");
    }
}

}  // namespace

bool hit_at_k(const RetrievalResult& r, std::size_t k, Level level)
{
    auto hits = unit_hits(r, k, level);
    return std::find(hits.begin(), hits.end(), true) != hits.end();
}

double recall_at_k(std::span<const RetrievalResult> results, std::size_t k, Level level)
{
    require_k(k);
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    std::size_t hits = 0;
    for (const auto& r : results) {
        hits += hit_at_k(r, k, level) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double unit_rate_at_k(std::span<const RetrievalResult> results, std::size_t k, Level level)
{
    require_k(k);
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    double total = 0.0;
    for (const auto& r : results) {
        auto hits = unit_hits(r, k, level);
        if (!hits.empty()) {
            total += static_cast<double>(std::count(hits.begin(), hits.end(), true))
                / static_cast<double>(hits.size());
        }
    }
    return total / static_cast<double>(results.size());
}

double exact_match(std::span<const RetrievalResult> results)
{
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    std::size_t matches = 0;
    for (const auto& r : results) {
        if (!r.answer) {
            throw MissingAnswers("question " + r.question.id + " has no answer");
        }
        if (!r.answer->error && answer_matches(r.answer->answer_text, r.question.gold_answers)) {
            ++matches;
        }
    }
    return static_cast<double>(matches) / static_cast<double>(results.size());
}

std::vector<SweepPoint> recall_vs_m_sweep(std::span<const RetrievalResult> results, std::size_t k,
                                          std::size_t m_max)
{
    require_k(k);
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    std::vector<SweepPoint> curve;
    for (std::size_t m = 1; m <= m_max; ++m) {
        std::size_t hits = 0;
        for (const auto& r : results) {
            std::size_t seen = 0;
            for (std::size_t i = 0; i < std::min(m, r.documents.size()) && seen < k; ++i) {
                const auto& d = r.documents[i];
                if (!d.ok() || !d.text) {
                    continue;
                }
                ++seen;
                if (contains_answer(*d.text, r.question.gold_answers)) {
                    ++hits;
                    break;
                }
            }
        }
        curve.push_back({m, static_cast<double>(hits) / static_cast<double>(results.size())});
    }
    return curve;
}

std::map<std::size_t, double> valid_url_rate(std::span<const RetrievalResult> results,
                                             std::span<const std::size_t> ms)
{
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    std::map<std::size_t, double> rates;
    for (auto m : ms) {
        if (m == 0) {
            throw ConfigError("valid-URL rate needs m >= 1");
        }
        std::size_t good = 0;
        for (const auto& r : results) {
            std::unordered_map<std::string_view, FetchStatus> status;
            for (const auto& d : r.documents) {
                status.emplace(d.url, d.fetch_status);
            }
            auto n = std::min(m, r.generation.urls.size());
            for (std::size_t i = 0; i < n; ++i) {
                const auto& u = r.generation.urls[i];
                if (u.status != UrlStatus::valid_wikipedia) {
                    continue;
                }
                auto it = status.find(u.normalized);
                good += (it != status.end() && it->second == FetchStatus::ok) ? 1 : 0;
            }
        }
        rates[m] = static_cast<double>(good) / static_cast<double>(m * results.size());
    }
    return rates;
}

// ---- entity split ----

EntityList load_entity_list(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw MissingEntityList("entity list not found: " + path.string());
    }
    EntityList list;
    list.path = path.string();
    auto contents = read_file(path);
    list.sha256 = sha256_hex(contents);
    std::size_t start = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string::npos) {
            end = contents.size();
        }
        auto line = trim(std::string_view(contents).substr(start, end - start));
        if (!line.empty()) {
            list.titles.emplace_back(line);
        }
        start = end + 1;
    }
    return list;
}

EntitySplit entity_frequency_split(std::span<const Question> questions, const EntityList& entities,
                                   std::size_t cutoff)
{
    std::unordered_set<std::string> common_titles;
    auto n = std::min(cutoff, entities.titles.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto t = entities.titles[i];
        std::replace(t.begin(), t.end(), '_', ' ');
        auto key = normalize_answer(t);
        if (!key.empty()) {
            common_titles.insert(std::move(key));
        }
    }
    EntitySplit split;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        bool common = std::any_of(questions[i].gold_answers.begin(), questions[i].gold_answers.end(),
                                  [&](const std::string& g) { return common_titles.count(normalize_answer(g)) > 0; });
        (common ? split.common : split.uncommon).push_back(i);
    }
    return split;
}

// ---- URL reconstruction ----

ReconstructionReport url_reconstruction_eval(std::span<const PageExcerpt> pages, LlmBackend& backend,
                                             const LlmParams& params, const PromptTemplate& tmpl,
                                             std::string_view url_prefix)
{
    ReconstructionReport report;
    std::size_t successes = 0;
    for (const auto& page : pages) {
        auto words = split_words(page.text);
        if (words.empty()) {
            throw DataError("reconstruction page '" + page.title + "' has no text");
        }
        words.resize(std::min(words.size(), kReconstructionWords));
        ReconstructionRecord rec;
        rec.title = page.title;
        try {
            auto prompt = build_reconstruction_prompt(join(words, " "), url_prefix, tmpl);
            auto completion = backend.complete(prompt, params);
            auto urls = extract_urls(reattach_url_prefix(url_prefix, completion.output_text));
            if (!urls.empty()) {
                rec.generated_url = urls.front().normalized;
                rec.success = urls.front().title && same_title(*urls.front().title, page.title);
            }
        } catch (const BackendError& e) {
            rec.error = std::string(e.kind()) + ": " + e.what();
        }
        successes += rec.success ? 1 : 0;
        report.pages.push_back(std::move(rec));
    }
    report.success_rate = pages.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(pages.size());
    return report;
}

// ---- reports ----

std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

EvalReport build_report(std::span<const RetrievalResult> results, const EvalOptions& options)
{
    if (results.empty()) {
        throw EmptyEvalSet();
    }
    EvalReport report;
    report.dataset_name = options.dataset_name;
    report.n_questions = results.size();

    auto ks = options.ks;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (auto k : ks) {
        require_k(k);
    }

    std::size_t ranked = 0;
    std::size_t answered = 0;
    for (const auto& r : results) {
        ranked += r.ranking ? 1 : 0;
        answered += r.answer ? 1 : 0;
    }
    if (ranked != 0 && ranked != results.size()) {
        throw MissingAnswers("passage metrics need every result ranked; " + std::to_string(ranked) + " of "
                             + std::to_string(results.size()) + " are");
    }
    if (answered != 0 && answered != results.size()) {
        throw MissingAnswers("exact match needs every result answered; " + std::to_string(answered) + " of "
                             + std::to_string(results.size()) + " are");
    }
    std::vector<Level> levels{Level::document};
    if (ranked > 0) {
        levels.push_back(Level::passage);
    }

    for (auto level : levels) {
        for (auto k : ks) {
            double hit = recall_at_k(results, k, level);
            double unit = unit_rate_at_k(results, k, level);
            report.recall_at[level][k] = hit;
            report.unit_rate_at[level][k] = unit;
            report.rows.push_back({std::string(to_string(level)), k, hit, "hit", std::nullopt, "all"});
            report.rows.push_back({std::string(to_string(level)), k, unit, "unit_rate", std::nullopt, "all"});
        }
    }
    if (answered > 0) {
        report.em = exact_match(results);
        report.rows.push_back({"answer", std::nullopt, *report.em, "em", std::nullopt, "all"});
    }
    if (options.valid_rate) {
        std::vector<std::size_t> ms(options.m_max);
        for (std::size_t i = 0; i < ms.size(); ++i) {
            ms[i] = i + 1;
        }
        report.valid_url_rate_by_m = valid_url_rate(results, ms);
        for (const auto& [m, v] : report.valid_url_rate_by_m) {
            report.rows.push_back({"url", std::nullopt, v, "valid_rate", m, "all"});
        }
    }
    if (options.sweep_m) {
        report.sweep_k = options.sweep_k;
        report.sweep = recall_vs_m_sweep(results, options.sweep_k, options.m_max);
        for (const auto& p : report.sweep) {
            report.rows.push_back({"document", options.sweep_k, p.recall, "hit", p.m, "all"});
        }
    }

    std::vector<std::string> subset_of(results.size());
    if (options.entity_list) {
        report.entity_list_sha256 = options.entity_list->sha256;
        std::vector<Question> questions;
        questions.reserve(results.size());
        for (const auto& r : results) {
            questions.push_back(r.question);
        }
        auto split = entity_frequency_split(questions, *options.entity_list, options.entity_cutoff);
        auto add_subset = [&](const std::string& name, const std::vector<std::size_t>& idx) {
            std::vector<RetrievalResult> subset;
            for (auto i : idx) {
                subset.push_back(results[i]);
                subset_of[i] = name;
            }
            auto& per_level = report.subset_recall[name];
            for (auto level : levels) {
                for (auto k : ks) {
                    // An empty subset has no defined recall; it is reported as 0.
                    double v = subset.empty() ? 0.0 : recall_at_k(subset, k, level);
                    per_level[level][k] = v;
                    report.rows.push_back({std::string(to_string(level)), k, v, "hit", std::nullopt, name});
                }
            }
        };
        add_subset("common", split.common);
        add_subset("uncommon", split.uncommon);
    }

    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        QuestionRow row;
        row.id = r.question.id;
        row.subset = subset_of[i];
        row.urls = r.generation.urls.size();
        row.valid_urls = static_cast<std::size_t>(std::count_if(
            r.generation.urls.begin(), r.generation.urls.end(),
            [](const ExtractedUrl& u) { return u.status == UrlStatus::valid_wikipedia; }));
        row.ok_documents = evaluation_units(r, Level::document).size();
        row.ranked_passages = r.ranked_passages.size();
        for (auto k : ks) {
            row.document_hit[k] = hit_at_k(r, k, Level::document);
            if (ranked > 0) {
                row.passage_hit[k] = hit_at_k(r, k, Level::passage);
            }
        }
        if (r.answer) {
            row.answer = r.answer->answer_text;
            row.exact_match = !r.answer->error && answer_matches(r.answer->answer_text, r.question.gold_answers);
        }
        report.per_question.push_back(std::move(row));
    }
    return report;
}

namespace {

json level_map(const std::map<std::size_t, double>& m)
{
    json j = json::object();
    for (const auto& [k, v] : m) {
        j[std::to_string(k)] = v;
    }
    return j;
}

}  // namespace

std::string report_json(const EvalReport& report)
{
    json j;
    j["dataset_name"] = report.dataset_name;
    j["n_questions"] = report.n_questions;
    j["manifest"] = report.manifest;
    j["recall_definition"] = "hit@k: a question counts when any of its first k units contains a gold answer";
    json recall = json::object();
    json unit = json::object();
    for (const auto& [level, m] : report.recall_at) {
        recall[std::string(to_string(level))] = level_map(m);
    }
    for (const auto& [level, m] : report.unit_rate_at) {
        unit[std::string(to_string(level))] = level_map(m);
    }
    j["recall_at"] = recall;
    j["unit_rate_at"] = unit;
    j["em"] = report.em ? json(*report.em) : json(nullptr);
    if (!report.valid_url_rate_by_m.empty()) {
        j["valid_url_rate_by_m"] = level_map(report.valid_url_rate_by_m);
    }
    if (!report.sweep.empty()) {
        json curve = json::array();
        for (const auto& p : report.sweep) {
            curve.push_back({{"m", p.m}, {"recall", p.recall}});
        }
        j["recall_vs_m"] = {{"k", report.sweep_k}, {"curve", curve}};
    }
    if (report.entity_list_sha256) {
        json subsets = json::object();
        for (const auto& [name, levels] : report.subset_recall) {
            json s = json::object();
            for (const auto& [level, m] : levels) {
                s[std::string(to_string(level))] = level_map(m);
            }
            subsets[name] = s;
        }
        j["entity_split"] = {{"entity_list_sha256", *report.entity_list_sha256},
                             {"matching", "gold answers against entity titles"},
                             {"recall_at", subsets}};
    }
    json rows = json::array();
    for (const auto& q : report.per_question) {
        json row{{"id", q.id},
                 {"urls", q.urls},
                 {"valid_urls", q.valid_urls},
                 {"ok_documents", q.ok_documents},
                 {"ranked_passages", q.ranked_passages}};
        if (!q.subset.empty()) {
            row["subset"] = q.subset;
        }
        json dh = json::object();
        for (const auto& [k, hit] : q.document_hit) {
            dh[std::to_string(k)] = hit;
        }
        row["document_hit"] = dh;
        if (!q.passage_hit.empty()) {
            json ph = json::object();
            for (const auto& [k, hit] : q.passage_hit) {
                ph[std::to_string(k)] = hit;
            }
            row["passage_hit"] = ph;
        }
        if (q.answer) {
            row["answer"] = *q.answer;
            row["exact_match"] = *q.exact_match;
        }
        rows.push_back(std::move(row));
    }
    j["per_question"] = rows;
    return j.dump(2) + "\n";
}

namespace {

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out += "\"";
    return out;
}

}  // namespace

std::string report_csv(const EvalReport& report)
{
    std::string out = "dataset,level,k,value,mode,m,subset\n";
    for (const auto& r : report.rows) {
        out += csv_field(report.dataset_name);
        out += ',' + r.level;
        out += ',' + (r.k ? std::to_string(*r.k) : std::string());
        out += ',' + format_number(r.value);
        out += ',' + r.mode;
        out += ',' + (r.m ? std::to_string(*r.m) : std::string());
        out += ',' + r.subset;
        out += '\n';
    }
    return out;
}

}  // namespace llmurl
