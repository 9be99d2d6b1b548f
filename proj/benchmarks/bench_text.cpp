#include <benchmark/benchmark.h>

#include <string>

#include "llmurl/html_text.hpp"
#include "llmurl/url_extract.hpp"

namespace {

using namespace llmurl;

void BM_ExtractUrls(benchmark::State& state)
{
    std::string generation;
    for (int i = 0; i < 10; ++i) {
        generation += "https://en.wikipedia.org/wiki/Article_" + std::to_string(i) + "\n";
    }
    generation += "The answer is probably jellyfish (see https://en.wikipedia.org/wiki/Smack_(group)).";
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_urls(generation));
    }
}
BENCHMARK(BM_ExtractUrls);

void BM_ExtractText(benchmark::State& state)
{
    std::string html = "<html><head><script>var x = 1;</script></head><body><div id=\"mw-content-text\">";
    for (int i = 0; i < state.range(0); ++i) {
        html += "<p>Paragraph " + std::to_string(i)
            + " with <a href=\"/wiki/X\">a link</a>, some <b>bold</b> text and a citation"
              "<sup class=\"reference\">[1]</sup>.</p>\n";
    }
    html += "<h2>References</h2><ol><li>ref</li></ol></div></body></html>";
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_text(html));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<long long>(html.size()));
}
BENCHMARK(BM_ExtractText)->Arg(100)->Arg(1000);

}  // namespace
