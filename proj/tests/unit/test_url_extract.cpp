#include <gtest/gtest.h>

#include <random>

#include "llmurl/prompting.hpp"
#include "llmurl/url_extract.hpp"
#include "test_support.hpp"

using namespace llmurl;

namespace {

std::vector<std::string> normalized(const std::vector<ExtractedUrl>& urls)
{
    std::vector<std::string> out;
    for (const auto& u : urls) {
        out.push_back(u.normalized);
    }
    return out;
}

}  // namespace

TEST(ExtractUrls, NoLinks)
{
    EXPECT_TRUE(extract_urls("no links here").empty());
    EXPECT_TRUE(extract_urls("").empty());
}

TEST(ExtractUrls, NumberedListKeepsOrder)
{
    const auto urls = extract_urls("1. https://en.wikipedia.org/wiki/Jellyfish\n2. https://en.wikipedia.org/wiki/Cnidaria");
    ASSERT_EQ(urls.size(), 2u);
    EXPECT_EQ(urls[0].normalized, "https://en.wikipedia.org/wiki/Jellyfish");
    EXPECT_EQ(urls[1].normalized, "https://en.wikipedia.org/wiki/Cnidaria");
    for (const auto& u : urls) {
        EXPECT_EQ(u.status, UrlStatus::valid_wikipedia);
    }
    EXPECT_EQ(urls[0].title, "Jellyfish");
}

TEST(ExtractUrls, DuplicatesDropped)
{
    const auto urls = extract_urls("https://en.wikipedia.org/wiki/A https://en.wikipedia.org/wiki/A");
    ASSERT_EQ(urls.size(), 1u);
    EXPECT_EQ(urls[0].raw, "https://en.wikipedia.org/wiki/A");
}

TEST(ExtractUrls, DuplicatesByNormalizedForm)
{
    const auto urls = extract_urls("http://EN.wikipedia.org/wiki/A#x and https://en.wikipedia.org/wiki/A.");
    ASSERT_EQ(urls.size(), 1u);
    EXPECT_EQ(urls[0].raw, "http://EN.wikipedia.org/wiki/A#x");
}

TEST(ExtractUrls, ParenthesizedTitlesSurvive)
{
    const auto urls = extract_urls("See (https://en.wikipedia.org/wiki/Smack_(group)), then stop.");
    ASSERT_EQ(urls.size(), 1u);
    EXPECT_EQ(urls[0].normalized, "https://en.wikipedia.org/wiki/Smack_(group)");
}

TEST(ExtractUrls, ProseIsDiscarded)
{
    const auto urls = extract_urls("The answer is jellyfish. https://en.wikipedia.org/wiki/Jellyfish is the best page.");
    EXPECT_EQ(normalized(urls), (std::vector<std::string>{"https://en.wikipedia.org/wiki/Jellyfish"}));
}

TEST(ExtractUrls, CountBoundedByHttpOccurrences)
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        std::string text;
        for (int j = 0; j < 5; ++j) {
            text += testkit::random_valid_url(rng) + (j % 2 ? "\n" : " and ");
        }
        std::size_t http_ci = 0;
        std::string lower = text;
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        for (std::size_t p = 0; (p = lower.find("http", p)) != std::string::npos; ++p) {
            ++http_ci;
        }
        EXPECT_LE(extract_urls(text).size(), http_ci) << text;
    }
}

TEST(ExtractUrls, OrderIsFirstOccurrence)
{
    const auto urls = extract_urls(
        "https://en.wikipedia.org/wiki/B https://example.com/x https://en.wikipedia.org/wiki/A "
        "https://en.wikipedia.org/wiki/B");
    EXPECT_EQ(normalized(urls), (std::vector<std::string>{"https://en.wikipedia.org/wiki/B", "https://example.com/x",
                                                          "https://en.wikipedia.org/wiki/A"}));
}

TEST(NormalizeUrl, Canonicalization)
{
    EXPECT_EQ(normalize_url("HTTP://EN.WIKIPEDIA.ORG/wiki/Jellyfish#anatomy"), "https://en.wikipedia.org/wiki/Jellyfish");
    EXPECT_EQ(normalize_url("https://en.wikipedia.org/wiki/Collective noun"),
              "https://en.wikipedia.org/wiki/Collective_noun");
    EXPECT_EQ(normalize_url("https://en.wikipedia.org/wiki/Jellyfish."), "https://en.wikipedia.org/wiki/Jellyfish");
    EXPECT_EQ(normalize_url("https://en.wikipedia.org/wiki/Jellyfish?action=edit"),
              "https://en.wikipedia.org/wiki/Jellyfish");
    EXPECT_EQ(normalize_url("https://en.wikipedia.org:443/wiki/Caf%C3%A9"), "https://en.wikipedia.org/wiki/Caf%C3%A9");
    EXPECT_EQ(normalize_url("http://example.com:80/a b"), "http://example.com/a%20b");
    EXPECT_EQ(normalize_url("https://en.wikipedia.org/wiki/Jellyfish\""), "https://en.wikipedia.org/wiki/Jellyfish");
}

TEST(NormalizeUrl, InvalidSyntaxThrows)
{
    EXPECT_THROW(normalize_url("htp:/en.wikipedia"), InvalidSyntax);
    EXPECT_THROW(normalize_url("https://"), InvalidSyntax);
    EXPECT_THROW(normalize_url("https://exa mple.com/x"), InvalidSyntax);
    EXPECT_THROW(normalize_url("https://host:port/x"), InvalidSyntax);
}

TEST(NormalizeUrl, IdempotentOnRandomUrls)
{
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const std::string u = testkit::random_valid_url(rng);
        const std::string once = normalize_url(u);
        EXPECT_EQ(normalize_url(once), once) << u;
    }
}

TEST(Classify, Examples)
{
    EXPECT_EQ(classify("https://en.wikipedia.org/wiki/Medusozoa"), UrlStatus::valid_wikipedia);
    EXPECT_EQ(classify("https://example.com/x"), UrlStatus::wrong_domain);
    EXPECT_EQ(classify("htp:/en.wikipedia"), UrlStatus::invalid_syntax);
    EXPECT_EQ(classify("https://de.wikipedia.org/wiki/Qualle"), UrlStatus::wrong_domain);
    EXPECT_EQ(classify("https://en.wikipedia.org/wiki/"), UrlStatus::wrong_domain);
    EXPECT_EQ(classify("https://en.wikipedia.org/w/index.php"), UrlStatus::wrong_domain);
}

TEST(Classify, ValidImpliesPrefixAndTitle)
{
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        for (const auto& u : extract_urls(testkit::random_valid_url(rng))) {
            if (u.status == UrlStatus::valid_wikipedia) {
                EXPECT_EQ(u.normalized.rfind(kWikipediaArticlePrefix, 0), 0u) << u.normalized;
                ASSERT_TRUE(u.title.has_value());
                EXPECT_FALSE(u.title->empty());
            } else {
                EXPECT_FALSE(u.title.has_value());
            }
        }
    }
}

TEST(Classify, FetchableUnderRestriction)
{
    EXPECT_TRUE(is_fetchable(UrlStatus::valid_wikipedia, true));
    EXPECT_FALSE(is_fetchable(UrlStatus::wrong_domain, true));
    EXPECT_TRUE(is_fetchable(UrlStatus::wrong_domain, false));
    EXPECT_FALSE(is_fetchable(UrlStatus::invalid_syntax, false));
}

TEST(Titles, PercentDecodedAndCompared)
{
    EXPECT_EQ(wikipedia_title("https://en.wikipedia.org/wiki/Caf%C3%A9"), "Caf\xc3\xa9");
    EXPECT_TRUE(same_title("Collective_noun", "Collective noun"));
    EXPECT_FALSE(same_title("Jellyfish", "Cnidaria"));
}

TEST(ReattachPrefix, OnlyForLeadingSlash)
{
    EXPECT_EQ(reattach_url_prefix(kDefaultUrlPrefix, "/Jellyfish\nfoo"), "https://en.wikipedia.org/wiki/Jellyfish\nfoo");
    EXPECT_EQ(reattach_url_prefix(kDefaultUrlPrefix, "https://x.org/a"), "https://x.org/a");
    EXPECT_EQ(reattach_url_prefix(kDefaultUrlPrefix, ""), "");
}

TEST(ExtractionSuite, AllCasesMatch)
{
    const auto suite = testkit::load_extraction_suite();
    ASSERT_EQ(suite.size(), 30u);
    for (const auto& c : suite) {
        const auto diff = testkit::describe_mismatch(c, extract_urls(c.generation));
        EXPECT_TRUE(diff.empty()) << diff;
    }
}
