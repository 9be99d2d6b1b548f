#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "llmurl/passages.hpp"
#include "llmurl/text_util.hpp"
#include "test_support.hpp"

using namespace llmurl;
using llmurl::testkit::ok_document;

namespace {

std::string words(std::size_t n, const std::string& w = "w")
{
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += (i ? " " : "") + w + std::to_string(i);
    }
    return s;
}

Passage make_passage(const std::string& text, std::size_t doc = 0, std::size_t idx = 0)
{
    Passage p;
    p.doc_index = doc;
    p.passage_index = idx;
    p.text = text;
    p.tokens = tokenize(text);
    p.length = split_words(text).size();
    return p;
}

}  // namespace

TEST(Tokenize, Examples)
{
    EXPECT_EQ(tokenize("A 'smack' is"), (std::vector<std::string>{"a", "smack", "is"}));
    EXPECT_EQ(tokenize("Cnidaria"), (std::vector<std::string>{"cnidaria"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("co-op, 42x!"), (std::vector<std::string>{"co", "op", "42x"}));
    EXPECT_EQ(tokenize("D\xc3\xa9j\xc3\xa0 vu"), (std::vector<std::string>{"d\xc3\xa9j\xc3\xa0", "vu"}));
}

TEST(Chunk, ArticleOfAverageLength)
{
    const auto ps = chunk(words(644));
    ASSERT_EQ(ps.size(), 7u);
    EXPECT_EQ(ps.back().length, 44u);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_EQ(ps[i].passage_index, i);
    }
}

TEST(Chunk, Boundaries)
{
    EXPECT_TRUE(chunk("").empty());
    EXPECT_TRUE(chunk("  \n\t ").empty());
    const auto one = chunk(words(100));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].length, 100u);
    EXPECT_EQ(chunk(words(101)).size(), 2u);
    EXPECT_EQ(chunk("a b c", 1).size(), 3u);
}

TEST(Chunk, LosslessOnRandomDocuments)
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 700)(rng);
        const std::size_t size = std::uniform_int_distribution<std::size_t>(1, 150)(rng);
        const std::string text = testkit::random_text(rng, n);
        const auto ps = chunk(text, size, 3);
        std::vector<std::string> texts;
        for (const auto& p : ps) {
            EXPECT_GE(p.length, 1u);
            EXPECT_LE(p.length, size);
            EXPECT_EQ(p.doc_index, 3u);
            texts.push_back(p.text);
        }
        EXPECT_EQ(join(texts, " "), normalize_whitespace(text));
        EXPECT_EQ(ps.size(), (n + size - 1) / size);
    }
}

TEST(CorpusStats, DocumentFrequencyBounds)
{
    const std::vector<Passage> ps{make_passage("a b a"), make_passage("b c"), make_passage("c")};
    const auto st = CorpusStats::build(ps);
    EXPECT_EQ(st.passage_count, 3u);
    EXPECT_DOUBLE_EQ(st.avgdl, 2.0);
    EXPECT_EQ(st.document_frequency("a"), 1u);
    EXPECT_EQ(st.document_frequency("b"), 2u);
    EXPECT_EQ(st.document_frequency("zzz"), 0u);
    for (const auto& [t, df] : st.df) {
        EXPECT_GE(df, 1u);
        EXPECT_LE(df, st.passage_count);
    }
}

TEST(Bm25, NoMatchingTermScoresZero)
{
    const std::vector<Passage> ps{make_passage("a b"), make_passage("c d")};
    const auto st = CorpusStats::build(ps);
    const std::vector<std::string> q{"x", "y"};
    EXPECT_EQ(bm25_score(q, ps[0], st), 0.0);
}

TEST(Bm25, IdenticalTokenMultisetsScoreEqually)
{
    const std::vector<Passage> ps{make_passage("smack jellyfish sea"), make_passage("sea jellyfish smack"),
                                  make_passage("other words here")};
    const auto st = CorpusStats::build(ps);
    for (const auto& q : {std::vector<std::string>{"smack"}, std::vector<std::string>{"sea", "words"},
                          std::vector<std::string>{"jellyfish", "jellyfish", "other"}}) {
        EXPECT_EQ(bm25_score(q, ps[0], st), bm25_score(q, ps[1], st));
    }
}

TEST(Bm25, EmptyCorpusThrows)
{
    const CorpusStats empty;
    const std::vector<std::string> q{"a"};
    EXPECT_THROW(bm25_score(q, make_passage("a"), empty), EmptyCorpus);
}

TEST(Bm25, IdfNeverNegative)
{
    for (std::size_t n = 1; n < 30; ++n) {
        for (std::size_t df = 0; df <= n; ++df) {
            EXPECT_GE(bm25_idf(n, df), 0.0);
        }
    }
}

// Four hand-written passages, query "smack jellyfish".
TEST(Bm25, HandWrittenCorpusMatchesOracle)
{
    const std::vector<Document> docs{
        ok_document("d0", "a group of jellyfish is called a smack"),
        ok_document("d1", "jellyfish jellyfish drift in the sea"),
        ok_document("d2", "a smack is also a fishing boat"),
        ok_document("d3", "collective nouns name groups of animals")};
    RankOptions opts;
    opts.top_n = 10;
    const auto ranked = rank_top_n("smack jellyfish", docs, opts);
    ASSERT_EQ(ranked.size(), 4u);

    const auto oracle = testkit::oracle_scores({"smack", "jellyfish"}, testkit::oracle_passages(docs, 100), 1.2, 0.75);
    for (const auto& r : ranked) {
        EXPECT_NEAR(r.score, static_cast<double>(oracle[r.passage.doc_index]), 1e-9);
    }
    EXPECT_EQ(ranked[0].passage.doc_index, 0u);  // both terms
    EXPECT_EQ(ranked[3].passage.doc_index, 3u);  // neither
    EXPECT_EQ(ranked[3].score, 0.0);
}

TEST(Bm25, RandomCorporaMatchOracle)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = testkit::random_corpus(rng);
        const auto op = testkit::oracle_passages(c.docs, c.chunk_size);
        if (op.empty()) {
            continue;
        }
        RankOptions opts;
        opts.top_n = 1000;
        opts.chunk_size = c.chunk_size;
        opts.bm25 = c.params;
        const auto ranked = rank_top_n(c.query, c.docs, opts);
        ASSERT_EQ(ranked.size(), op.size());
        const auto oracle = testkit::oracle_scores(c.query_terms, op, c.params.k1, c.params.b);
        std::map<std::pair<std::size_t, std::size_t>, long double> by_id;
        for (std::size_t i = 0; i < op.size(); ++i) {
            by_id[{op[i].doc, op[i].index}] = oracle[i];
        }
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            const auto key = std::make_pair(ranked[i].passage.doc_index, ranked[i].passage.passage_index);
            ASSERT_EQ(by_id.count(key), 1u);
            EXPECT_NEAR(ranked[i].score, static_cast<double>(by_id[key]), 1e-9);
            if (i > 0) {
                EXPECT_GE(ranked[i - 1].score, ranked[i].score);
            }
        }
    }
}

TEST(Ranking, EmptyAndSmallCorpora)
{
    const std::vector<Document> none{testkit::failed_document("u", FetchStatus::not_found)};
    EXPECT_TRUE(rank_top_n("question", none).empty());
    const std::vector<Document> one{ok_document("u", "just a few words")};
    const auto r = rank_top_n("few words", one);
    ASSERT_EQ(r.size(), 1u);
}

TEST(Ranking, TiesBreakByProvenance)
{
    const std::vector<Document> docs{ok_document("a", "x y"), ok_document("b", "x y"), ok_document("c", "x y")};
    RankOptions opts;
    opts.chunk_size = 1;
    const auto r = rank_top_n("x", docs, opts);
    ASSERT_EQ(r.size(), 6u);
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (const auto& p : r) {
        order.emplace_back(p.passage.doc_index, p.passage.passage_index);
    }
    const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}};
    EXPECT_EQ(order, expected);
}

TEST(Ranking, PermutationPrefixWithoutDuplicates)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = testkit::random_corpus(rng);
        RankOptions opts;
        opts.chunk_size = c.chunk_size;
        opts.top_n = 1 + trial % 12;
        const auto all = build_passage_set(c.docs, c.chunk_size);
        const auto r = rank_top_n(c.query, c.docs, opts);
        EXPECT_EQ(r.size(), std::min(opts.top_n, all.size()));
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_TRUE(seen.emplace(r[i].passage.doc_index, r[i].passage.passage_index).second);
            if (i > 0) {
                EXPECT_TRUE(ranks_before(r[i - 1], r[i]));
            }
        }
    }
}

// Scaling k1 preserves the order of equal-length passages for single-term
// queries: the term weight is then a monotone function of tf alone.
TEST(Ranking, K1ScalingPreservesOrderOfEqualLengthPassagesForOneTerm)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Passage> ps;
        for (int i = 0; i < 8; ++i) {
            std::string t;
            for (int w = 0; w < 6; ++w) {
                t += (w ? " " : "") + std::string(1, static_cast<char>('a' + rng() % 3));
            }
            ps.push_back(make_passage(t, 0, static_cast<std::size_t>(i)));
        }
        const auto st = CorpusStats::build(ps);
        const std::vector<std::string> q{std::string(1, static_cast<char>('a' + rng() % 3))};
        const double k1 = 0.1 + static_cast<double>(rng() % 30) / 10.0;
        const double c = 0.25 + static_cast<double>(rng() % 16) / 4.0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            for (std::size_t j = 0; j < ps.size(); ++j) {
                const bool before = bm25_score(q, ps[i], st, {k1, 0.75}) > bm25_score(q, ps[j], st, {k1, 0.75});
                const bool after =
                    bm25_score(q, ps[i], st, {k1 * c, 0.75}) > bm25_score(q, ps[j], st, {k1 * c, 0.75});
                EXPECT_EQ(before, after);
            }
        }
    }
}

// With several query terms the same scaling can reorder equal-length
// passages, so the property is only claimed for the scope above.
TEST(Ranking, K1ScalingCanReorderMultiTermQueries)
{
    // p0 repeats a term that also occurs elsewhere; p1 holds two unique terms once.
    const std::vector<Passage> ps{make_passage("r r r r"), make_passage("c d x x"), make_passage("r y y y"),
                                  make_passage("y y y x"), make_passage("x x y y")};
    const auto st = CorpusStats::build(ps);
    const std::vector<std::string> q{"r", "c", "d"};
    const double low = bm25_score(q, ps[0], st, {0.1, 0.75}) - bm25_score(q, ps[1], st, {0.1, 0.75});
    const double high = bm25_score(q, ps[0], st, {100.0, 0.75}) - bm25_score(q, ps[1], st, {100.0, 0.75});
    EXPECT_LT(low * high, 0.0) << "expected the order of p0 and p1 to flip";
}

TEST(Ranking, PluggableScorer)
{
    struct Reverse final : PassageScorer {
        std::vector<double> score_all(std::span<const std::string>, std::span<const Passage> corpus) const override
        {
            std::vector<double> s;
            for (const auto& p : corpus) {
                s.push_back(static_cast<double>(p.doc_index));
            }
            return s;
        }
    };
    const std::vector<Document> docs{ok_document("a", "x"), ok_document("b", "x"), ok_document("c", "x")};
    const auto r = rank_top_n("x", docs, RankOptions{}, Reverse{});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].passage.doc_index, 2u);
}
