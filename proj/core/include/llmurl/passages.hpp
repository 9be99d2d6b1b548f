#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "llmurl/document.hpp"
#include "llmurl/error.hpp"

namespace llmurl {

inline constexpr std::size_t kDefaultChunkSize = 100;
inline constexpr std::size_t kDefaultTopN = 10;

/// A window of at most chunk_size consecutive words of one document.
/// `length` is the window's word count; `tokens` are its lowercased terms.
struct Passage {
    std::size_t doc_index = 0;
    std::size_t passage_index = 0;
    std::string text;
    std::vector<std::string> tokens;
    std::size_t length = 0;
};

struct RankedPassage {
    Passage passage;
    double score = 0.0;
};

/// Lowercases ASCII and splits on every byte that is not an ASCII letter or
/// digit. Bytes >= 0x80 count as term characters, so UTF-8 words survive
/// intact. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

/// Consecutive non-overlapping windows of chunk_size whitespace-delimited
/// words; the last window carries the remainder.
std::vector<Passage> chunk(std::string_view document_text, std::size_t chunk_size = kDefaultChunkSize,
                           std::size_t doc_index = 0);

class EmptyCorpus : public Error {
  public:
    using Error::Error;
};

struct CorpusStats {
    std::size_t passage_count = 0;
    double avgdl = 0.0;
    std::unordered_map<std::string, std::size_t> df;

    static CorpusStats build(std::span<const Passage> passages);
    [[nodiscard]] std::size_t document_frequency(const std::string& term) const;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
double bm25_idf(std::size_t passage_count, std::size_t df);

/// Okapi BM25 of `p` for the distinct terms of `query_terms`. Throws
/// EmptyCorpus when stats cover no passages.
double bm25_score(std::span<const std::string> query_terms, const Passage& p, const CorpusStats& stats,
                  Bm25Params params = {});

/// Relevance function used by rank_top_n. Higher means more relevant.
class PassageScorer {
  public:
    virtual ~PassageScorer() = default;
    /// One score per passage, in corpus order.
    virtual std::vector<double> score_all(std::span<const std::string> query_terms,
                                          std::span<const Passage> corpus) const = 0;
};

class Bm25Scorer final : public PassageScorer {
  public:
    explicit Bm25Scorer(Bm25Params params = {}) : m_params(params) {}
    std::vector<double> score_all(std::span<const std::string> query_terms,
                                  std::span<const Passage> corpus) const override;

  private:
    Bm25Params m_params;
};

struct RankOptions {
    std::size_t top_n = kDefaultTopN;
    std::size_t chunk_size = kDefaultChunkSize;
    Bm25Params bm25;
};

/// All passages of the ok documents, doc_index = position in `docs`.
std::vector<Passage> build_passage_set(std::span<const Document> docs, std::size_t chunk_size);

/// Orders by score desc, then doc_index asc, then passage_index asc.
bool ranks_before(const RankedPassage& a, const RankedPassage& b) noexcept;

/// Scores every passage of the ok documents against the question (corpus
/// statistics are per question) and keeps the first min(n, |passages|).
std::vector<RankedPassage> rank_top_n(std::string_view question_text, std::span<const Document> docs,
                                      const RankOptions& options = {});
std::vector<RankedPassage> rank_top_n(std::string_view question_text, std::span<const Document> docs,
                                      const RankOptions& options, const PassageScorer& scorer);

}  // namespace llmurl
