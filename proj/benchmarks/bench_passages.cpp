#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "llmurl/passages.hpp"

namespace {

using namespace llmurl;

std::string random_words(std::mt19937_64& rng, std::size_t n, std::size_t vocab)
{
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += "w" + std::to_string(rng() % vocab) + " ";
    }
    return s;
}

// Ten fetched articles per question; article length is the swept parameter.
std::vector<Document> corpus(std::size_t words_per_doc)
{
    std::mt19937_64 rng(1);
    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i) {
        Document d;
        d.url = "https://en.wikipedia.org/wiki/D" + std::to_string(i);
        d.fetch_status = FetchStatus::ok;
        d.text = random_words(rng, words_per_doc, 5000);
        docs.push_back(std::move(d));
    }
    return docs;
}

void BM_RankTopN(benchmark::State& state)
{
    const auto docs = corpus(static_cast<std::size_t>(state.range(0)));
    const std::string query = "w1 w20 w300 w4000 which sea creature";
    for (auto _ : state) {
        benchmark::DoNotOptimize(rank_top_n(query, docs));
    }
    state.SetItemsProcessed(state.iterations() * 10 * state.range(0));
}
BENCHMARK(BM_RankTopN)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Chunk(benchmark::State& state)
{
    std::mt19937_64 rng(2);
    const auto text = random_words(rng, static_cast<std::size_t>(state.range(0)), 5000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(chunk(text));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<long long>(text.size()));
}
BENCHMARK(BM_Chunk)->Arg(10000);

void BM_Tokenize(benchmark::State& state)
{
    std::mt19937_64 rng(3);
    const auto text = random_words(rng, 10000, 5000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tokenize(text));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<long long>(text.size()));
}
BENCHMARK(BM_Tokenize);

}  // namespace
