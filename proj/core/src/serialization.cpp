#include "llmurl/serialization.hpp"

#include "llmurl/error.hpp"

namespace llmurl {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

ojson to_json(const ExtractedUrl& u)
{
    ojson j{{"raw", u.raw}, {"normalized", u.normalized}, {"status", to_string(u.status)}};
    if (u.title) {
        j["title"] = *u.title;
    }
    return j;
}

ojson to_json(const Document& d)
{
    ojson j{{"url", d.url},
            {"fetch_status", to_string(d.fetch_status)},
            {"word_count", d.word_count},
            {"fetched_at", d.fetched_at},
            {"from_cache", d.from_cache}};
    if (d.text) {
        j["text"] = *d.text;
    }
    return j;
}

ojson to_json(const RankedPassage& p)
{
    return ojson{{"doc_index", p.passage.doc_index},
                 {"passage_index", p.passage.passage_index},
                 {"length", p.passage.length},
                 {"score", p.score},
                 {"text", p.passage.text}};
}

ojson to_json(const AnswerRecord& a)
{
    ojson j{{"question_id", a.question_id},
            {"raw_generation", a.raw_generation},
            {"answer_text", a.answer_text},
            {"passages_used", a.passages_used},
            {"mode", to_string(a.mode)}};
    if (a.error) {
        j["error"] = *a.error;
    }
    return j;
}

ojson to_json(const RetrievalResult& r)
{
    ojson j;
    j["index"] = r.index;
    j["question"] = {{"id", r.question.id}, {"text", r.question.text}, {"gold_answers", r.question.gold_answers}};
    j["shots"] = r.shots;
    if (r.error) {
        j["error"] = *r.error;
    }
    ojson urls = ojson::array();
    for (const auto& u : r.generation.urls) {
        urls.push_back(to_json(u));
    }
    j["generation"] = {{"question_id", r.generation.question_id}, {"raw_text", r.generation.raw_text}, {"urls", urls}};
    ojson docs = ojson::array();
    for (const auto& d : r.documents) {
        docs.push_back(to_json(d));
    }
    j["documents"] = docs;
    if (r.ranking) {
        j["ranking"] = {{"top_n", r.ranking->top_n},
                        {"chunk_size", r.ranking->chunk_size},
                        {"bm25_k1", r.ranking->bm25.k1},
                        {"bm25_b", r.ranking->bm25.b}};
        ojson ranked = ojson::array();
        for (const auto& p : r.ranked_passages) {
            ranked.push_back(to_json(p));
        }
        j["ranked_passages"] = ranked;
    }
    if (r.answer) {
        j["answer"] = to_json(*r.answer);
    }
    return j;
}

RetrievalResult retrieval_result_from_json(const json& j)
{
    RetrievalResult r;
    r.index = j.at("index").get<std::size_t>();
    const auto& q = j.at("question");
    r.question.id = q.at("id").get<std::string>();
    r.question.text = q.at("text").get<std::string>();
    r.question.gold_answers = q.at("gold_answers").get<std::vector<std::string>>();
    r.shots = j.value("shots", std::string("zero"));
    if (j.contains("error")) {
        r.error = j.at("error").get<std::string>();
    }
    const auto& g = j.at("generation");
    r.generation.question_id = g.at("question_id").get<std::string>();
    r.generation.raw_text = g.at("raw_text").get<std::string>();
    for (const auto& u : g.at("urls")) {
        ExtractedUrl e;
        e.raw = u.at("raw").get<std::string>();
        e.normalized = u.at("normalized").get<std::string>();
        e.status = url_status_from_string(u.at("status").get<std::string>());
        if (u.contains("title")) {
            e.title = u.at("title").get<std::string>();
        }
        r.generation.urls.push_back(std::move(e));
    }
    for (const auto& d : j.at("documents")) {
        Document doc;
        doc.url = d.at("url").get<std::string>();
        doc.fetch_status = fetch_status_from_string(d.at("fetch_status").get<std::string>());
        doc.word_count = d.at("word_count").get<std::size_t>();
        doc.fetched_at = d.at("fetched_at").get<long long>();
        doc.from_cache = d.at("from_cache").get<bool>();
        if (d.contains("text")) {
            doc.text = d.at("text").get<std::string>();
        }
        r.documents.push_back(std::move(doc));
    }
    if (j.contains("ranking")) {
        const auto& k = j.at("ranking");
        RankingInfo info;
        info.top_n = k.at("top_n").get<std::size_t>();
        info.chunk_size = k.at("chunk_size").get<std::size_t>();
        info.bm25.k1 = k.at("bm25_k1").get<double>();
        info.bm25.b = k.at("bm25_b").get<double>();
        r.ranking = info;
        for (const auto& p : j.at("ranked_passages")) {
            RankedPassage rp;
            rp.passage.doc_index = p.at("doc_index").get<std::size_t>();
            rp.passage.passage_index = p.at("passage_index").get<std::size_t>();
            rp.passage.length = p.at("length").get<std::size_t>();
            rp.passage.text = p.at("text").get<std::string>();
            rp.passage.tokens = tokenize(rp.passage.text);
            rp.score = p.at("score").get<double>();
            r.ranked_passages.push_back(std::move(rp));
        }
    }
    if (j.contains("answer")) {
        const auto& a = j.at("answer");
        AnswerRecord rec;
        rec.question_id = a.at("question_id").get<std::string>();
        rec.raw_generation = a.at("raw_generation").get<std::string>();
        rec.answer_text = a.at("answer_text").get<std::string>();
        rec.passages_used = a.at("passages_used").get<std::size_t>();
        rec.mode = answer_mode_from_string(a.at("mode").get<std::string>());
        if (a.contains("error")) {
            rec.error = a.at("error").get<std::string>();
        }
        r.answer = std::move(rec);
    }
    return r;
}

std::string result_text(const RetrievalResult& r)
{
    return to_json(r).dump(2) + "\n";
}

RetrievalResult parse_result_text(std::string_view text, std::string_view source_name)
{
    try {
        return retrieval_result_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string(source_name) + ": " + e.what());
    }
}

}  // namespace llmurl
