#include <gtest/gtest.h>

#include <set>

#include "llmurl/error.hpp"
#include "llmurl/prompting.hpp"
#include "llmurl/text_util.hpp"
#include "test_support.hpp"

using namespace llmurl;

namespace {

Question smack()
{
    return {"q", "A 'smack' is a collective noun for a group of which sea creatures?", {"jellyfish"}};
}

std::size_t count(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (std::size_t p = 0; (p = hay.find(needle, p)) != std::string::npos; p += needle.size()) {
        ++n;
    }
    return n;
}

std::vector<Demonstration> demos(std::size_t d)
{
    std::vector<Demonstration> out;
    for (std::size_t i = 0; i < d; ++i) {
        out.push_back({"Demo question " + std::to_string(i) + "?",
                       {"https://en.wikipedia.org/wiki/D" + std::to_string(i), "https://en.wikipedia.org/wiki/E"}});
    }
    return out;
}

}  // namespace

TEST(RetrievalPrompt, ZeroShotLayout)
{
    RetrievalPromptSpec spec;
    const auto p = build_retrieval_prompt(smack(), spec);
    EXPECT_EQ(p,
              "Question: A 'smack' is a collective noun for a group of which sea creatures?\n"
              "Which 10 Wikipedia URLs would have the answer?\n"
              "https://en.wikipedia.org/wiki");
    EXPECT_NE(p.find("Which 10 Wikipedia URLs would have the answer?"), std::string::npos);
    EXPECT_TRUE(p.ends_with("https://en.wikipedia.org/wiki"));
    EXPECT_EQ(count(p, "Question:"), 1u);
}

TEST(RetrievalPrompt, MSubstituted)
{
    RetrievalPromptSpec spec;
    spec.m = 3;
    EXPECT_NE(build_retrieval_prompt(smack(), spec).find("Which 3 Wikipedia URLs"), std::string::npos);
    spec.m = 0;
    EXPECT_THROW(build_retrieval_prompt(smack(), spec), ConfigError);
}

TEST(RetrievalPrompt, TenDemonstrationsPrecedeTarget)
{
    RetrievalPromptSpec spec;
    spec.demonstrations = demos(10);
    const auto p = build_retrieval_prompt(smack(), spec);
    const auto target = p.find("Question: A 'smack'");
    ASSERT_NE(target, std::string::npos);
    EXPECT_EQ(count(p.substr(0, target), "Question: "), 10u);
    EXPECT_EQ(count(p, "Which 10 Wikipedia URLs would have the answer?"), 11u);
    EXPECT_TRUE(p.ends_with(spec.url_prefix));
    EXPECT_NE(p.find("Question: Demo question 0?\nWhich 10 Wikipedia URLs would have the answer?\n"
                     "https://en.wikipedia.org/wiki/D0\nhttps://en.wikipedia.org/wiki/E\n\n"),
              std::string::npos);
}

TEST(RetrievalPrompt, DemonstrationsShowAtMostMUrls)
{
    RetrievalPromptSpec spec;
    spec.m = 1;
    spec.demonstrations = demos(2);
    const auto p = build_retrieval_prompt(smack(), spec);
    EXPECT_EQ(count(p, "wiki/E"), 0u);
    EXPECT_EQ(count(p, "wiki/D"), 2u);
}

TEST(RetrievalPrompt, DeterministicAndMonotone)
{
    RetrievalPromptSpec spec;
    std::size_t prev = build_retrieval_prompt(smack(), spec).size();
    for (std::size_t d = 1; d <= 12; ++d) {
        spec.demonstrations = demos(d);
        const auto a = build_retrieval_prompt(smack(), spec);
        EXPECT_EQ(a, build_retrieval_prompt(smack(), spec));
        EXPECT_GT(a.size(), prev);
        prev = a.size();
    }
}

TEST(RetrievalPrompt, CustomPrefixIsLastCharacters)
{
    RetrievalPromptSpec spec;
    spec.url_prefix = "https://simple.wikipedia.org/wiki";
    EXPECT_TRUE(build_retrieval_prompt(smack(), spec).ends_with("https://simple.wikipedia.org/wiki"));
}

TEST(ReaderPrompt, TenPassagesThenQuestion)
{
    std::vector<std::string> ps;
    for (int i = 1; i <= 10; ++i) {
        ps.push_back("text of passage " + std::to_string(i));
    }
    const auto p = build_reader_prompt(smack(), ps);
    std::size_t last = 0;
    for (int i = 1; i <= 10; ++i) {
        const auto at = p.find("Passage " + std::to_string(i) + ": text of passage " + std::to_string(i) + "\n");
        ASSERT_NE(at, std::string::npos);
        EXPECT_GE(at, last);
        last = at;
    }
    EXPECT_GT(p.find("Question: A 'smack'"), last);
    EXPECT_TRUE(p.ends_with("Answer the question in as few words as possible using the passages above.\n"));
}

TEST(ReaderPrompt, ClosedBook)
{
    EXPECT_EQ(build_reader_prompt(smack(), {}),
              "Question: A 'smack' is a collective noun for a group of which sea creatures?\n"
              "Answer the question in as few words as possible.\n");
}

TEST(ReaderPrompt, SinglePassageAppearsOnce)
{
    const std::vector<std::string> ps{"X"};
    EXPECT_EQ(count(build_reader_prompt(smack(), ps), "X"), 1u);
}

TEST(ReconstructionPrompt, EndsWithPrefix)
{
    const auto p = build_reconstruction_prompt("Jellyfish are animals.");
    EXPECT_EQ(p, "Jellyfish are animals.\n\nWhich Wikipedia URL is this text from?\nhttps://en.wikipedia.org/wiki");
}

TEST(Template, OverridesAndValidation)
{
    const auto t = PromptTemplate::from_json_text(R"({"retrieval_instruction": "List {m} pages."})");
    EXPECT_EQ(t.retrieval_instruction, "List {m} pages.");
    EXPECT_EQ(t.question_line, PromptTemplate::defaults().question_line);
    RetrievalPromptSpec spec;
    spec.m = 4;
    EXPECT_NE(build_retrieval_prompt(smack(), spec, t).find("List 4 pages."), std::string::npos);
    EXPECT_THROW(PromptTemplate::from_json_text(R"({"question_line": "no placeholder"})"), ConfigError);
    EXPECT_THROW(PromptTemplate::from_json_text("[1,2]"), ConfigError);
    EXPECT_THROW(PromptTemplate::from_json_text(R"({"unknown_key": "x"})"), ConfigError);
}

TEST(Demonstrations, SeededSampleWithoutReplacement)
{
    std::vector<Demonstration> pool;
    for (int i = 0; i < 40; ++i) {
        pool.push_back({"q" + std::to_string(i), {"https://en.wikipedia.org/wiki/X"}});
    }
    const auto a = sample_demonstrations(pool, 10, 13);
    const auto b = sample_demonstrations(pool, 10, 13);
    ASSERT_EQ(a.size(), 10u);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].question_text, b[i].question_text);
        EXPECT_TRUE(seen.insert(a[i].question_text).second);
    }
    const auto c = sample_demonstrations(pool, 10, 14);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        differs |= a[i].question_text != c[i].question_text;
    }
    EXPECT_TRUE(differs);
    EXPECT_EQ(sample_demonstrations(pool, 40, 1).size(), 40u);
    EXPECT_THROW(sample_demonstrations(pool, 41, 1), ConfigError);
}

TEST(Demonstrations, RoughlyUniform)
{
    std::vector<Demonstration> pool;
    for (int i = 0; i < 5; ++i) {
        pool.push_back({std::to_string(i), {"https://en.wikipedia.org/wiki/X"}});
    }
    std::map<std::string, int> first;
    for (std::uint64_t seed = 0; seed < 5000; ++seed) {
        ++first[sample_demonstrations(pool, 1, seed)[0].question_text];
    }
    for (const auto& [k, n] : first) {
        EXPECT_NEAR(n, 1000, 150) << k;
    }
}

TEST(QuestionValidation, RejectsEmptyParts)
{
    EXPECT_NO_THROW(smack().validate());
    EXPECT_THROW((Question{"x", " ", {"a"}}.validate()), DataError);
    EXPECT_THROW((Question{"x", "q", {}}.validate()), DataError);
    EXPECT_THROW((Question{"x", "q", {"a", ""}}.validate()), DataError);
}
