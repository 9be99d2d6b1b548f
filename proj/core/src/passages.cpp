#include "llmurl/passages.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "llmurl/text_util.hpp"

namespace llmurl {

namespace {

bool is_term_byte(unsigned char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::vector<std::string> distinct_terms(std::span<const std::string> terms)
{
    std::vector<std::string> out;
    std::unordered_set<std::string_view> seen;
    for (const auto& t : terms) {
        if (seen.insert(t).second) {
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_term_byte(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<Passage> chunk(std::string_view document_text, std::size_t chunk_size, std::size_t doc_index)
{
    if (chunk_size == 0) {
        chunk_size = 1;
    }
    auto words = split_words(document_text);
    std::vector<Passage> out;
    out.reserve((words.size() + chunk_size - 1) / chunk_size);
    for (std::size_t start = 0; start < words.size(); start += chunk_size) {
        auto end = std::min(words.size(), start + chunk_size);
        Passage p;
        p.doc_index = doc_index;
        p.passage_index = out.size();
        for (auto i = start; i < end; ++i) {
            if (i > start) {
                p.text.push_back(' ');
            }
            p.text += words[i];
        }
        p.tokens = tokenize(p.text);
        p.length = end - start;
        out.push_back(std::move(p));
    }
    return out;
}

CorpusStats CorpusStats::build(std::span<const Passage> passages)
{
    CorpusStats s;
    s.passage_count = passages.size();
    std::size_t total = 0;
    for (const auto& p : passages) {
        total += p.length;
        std::unordered_set<std::string_view> seen;
        for (const auto& t : p.tokens) {
            if (seen.insert(t).second) {
                ++s.df[t];
            }
        }
    }
    s.avgdl = passages.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(passages.size());
    return s;
}

std::size_t CorpusStats::document_frequency(const std::string& term) const
{
    auto it = df.find(term);
    return it == df.end() ? 0 : it->second;
}

double bm25_idf(std::size_t passage_count, std::size_t df)
{
    double n = static_cast<double>(passage_count);
    double f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

namespace {

double saturated_tf(double tf, double length, double avgdl, Bm25Params params)
{
    double norm = params.k1 * (1.0 - params.b + params.b * length / avgdl);
    return tf * (params.k1 + 1.0) / (tf + norm);
}

double score_counts(const std::vector<std::string>& terms, const std::vector<double>& idf,
                    const std::unordered_map<std::string_view, std::size_t>& counts, double length,
                    double avgdl, Bm25Params params)
{
    double score = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        auto it = counts.find(terms[i]);
        if (it == counts.end()) {
            continue;
        }
        score += idf[i] * saturated_tf(static_cast<double>(it->second), length, avgdl, params);
    }
    return score;
}

std::unordered_map<std::string_view, std::size_t> term_counts(const Passage& p)
{
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& t : p.tokens) {
        ++counts[t];
    }
    return counts;
}

}  // namespace

double bm25_score(std::span<const std::string> query_terms, const Passage& p, const CorpusStats& stats,
                  Bm25Params params)
{
    if (stats.passage_count == 0) {
        throw EmptyCorpus("bm25_score: corpus has no passages");
    }
    auto terms = distinct_terms(query_terms);
    std::vector<double> idf;
    idf.reserve(terms.size());
    for (const auto& t : terms) {
        idf.push_back(bm25_idf(stats.passage_count, stats.document_frequency(t)));
    }
    return score_counts(terms, idf, term_counts(p), static_cast<double>(p.length), stats.avgdl, params);
}

std::vector<double> Bm25Scorer::score_all(std::span<const std::string> query_terms,
                                          std::span<const Passage> corpus) const
{
    std::vector<double> scores(corpus.size(), 0.0);
    if (corpus.empty()) {
        return scores;
    }
    auto stats = CorpusStats::build(corpus);
    auto terms = distinct_terms(query_terms);
    std::vector<double> idf;
    idf.reserve(terms.size());
    for (const auto& t : terms) {
        idf.push_back(bm25_idf(stats.passage_count, stats.document_frequency(t)));
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        scores[i] = score_counts(terms, idf, term_counts(corpus[i]), static_cast<double>(corpus[i].length),
                                 stats.avgdl, m_params);
    }
    return scores;
}

std::vector<Passage> build_passage_set(std::span<const Document> docs, std::size_t chunk_size)
{
    std::vector<Passage> all;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!docs[i].ok() || !docs[i].text) {
            continue;
        }
        auto ps = chunk(*docs[i].text, chunk_size, i);
        std::move(ps.begin(), ps.end(), std::back_inserter(all));
    }
    return all;
}

bool ranks_before(const RankedPassage& a, const RankedPassage& b) noexcept
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.passage.doc_index != b.passage.doc_index) {
        return a.passage.doc_index < b.passage.doc_index;
    }
    return a.passage.passage_index < b.passage.passage_index;
}

std::vector<RankedPassage> rank_top_n(std::string_view question_text, std::span<const Document> docs,
                                      const RankOptions& options)
{
    return rank_top_n(question_text, docs, options, Bm25Scorer(options.bm25));
}

std::vector<RankedPassage> rank_top_n(std::string_view question_text, std::span<const Document> docs,
                                      const RankOptions& options, const PassageScorer& scorer)
{
    auto passages = build_passage_set(docs, options.chunk_size);
    if (passages.empty()) {
        return {};
    }
    auto query = tokenize(question_text);
    auto scores = scorer.score_all(query, passages);
    std::vector<RankedPassage> ranked;
    ranked.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i) {
        ranked.push_back({std::move(passages[i]), scores[i]});
    }
    auto keep = std::min(options.top_n, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                      ranks_before);
    ranked.resize(keep);
    return ranked;
}

}  // namespace llmurl
