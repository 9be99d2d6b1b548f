#include "llmurl/dataset.hpp"

#include <json.hpp>

#include <regex>
#include <unordered_set>

#include "llmurl/error.hpp"
#include "llmurl/text_util.hpp"
#include "llmurl/url_extract.hpp"

namespace llmurl {

using json = nlohmann::json;

Question DatasetRecord::to_question() const
{
    return Question{id, question, answers};
}

namespace {

DatasetRecord record_from_json(const json& j)
{
    DatasetRecord r;
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    r.question = j.at("question").get<std::string>();
    r.answers = j.at("answers").get<std::vector<std::string>>();
    if (j.contains("gold_urls") && !j.at("gold_urls").is_null()) {
        r.gold_urls = j.at("gold_urls").get<std::vector<std::string>>();
    }
    return r;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view jsonl, std::string_view source_name)
{
    std::vector<DatasetRecord> out;
    std::unordered_set<std::string> ids;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        auto line = trim(jsonl.substr(start, end - start));
        start = end + 1;
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto where = std::string(source_name) + ":" + std::to_string(lineno) + ": ";
        DatasetRecord r;
        try {
            r = record_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError(where + e.what());
        }
        try {
            r.to_question().validate();
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
        if (!ids.insert(r.id).second) {
            throw DataError(where + "duplicate id " + r.id);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path)
{
    return parse_dataset(read_file(path), path.string());
}

std::string dataset_record_json(const DatasetRecord& r)
{
    nlohmann::ordered_json j{{"id", r.id}, {"question", r.question}, {"answers", r.answers}};
    if (r.gold_urls) {
        j["gold_urls"] = *r.gold_urls;
    }
    return j.dump();
}

void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records)
{
    std::string out;
    for (const auto& r : records) {
        out += dataset_record_json(r);
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<Demonstration> demonstration_pool(std::span<const DatasetRecord> train)
{
    std::vector<Demonstration> pool;
    for (const auto& r : train) {
        if (!r.gold_urls) {
            continue;
        }
        Demonstration d;
        d.question_text = r.question;
        for (const auto& u : *r.gold_urls) {
            if (parse_url(trim(u))) {
                d.urls.emplace_back(trim(u));
            }
        }
        if (!d.urls.empty()) {
            pool.push_back(std::move(d));
        }
    }
    return pool;
}

NativeFormat native_format_from_string(std::string_view s)
{
    if (s == "webq") return NativeFormat::webq;
    if (s == "nq") return NativeFormat::nq;
    if (s == "triviaqa") return NativeFormat::triviaqa;
    if (s == "dpr") return NativeFormat::dpr;
    throw ConfigError("unknown dataset format: " + std::string(s));
}

std::string title_to_wikipedia_url(std::string_view title)
{
    std::string t(trim(title));
    std::replace(t.begin(), t.end(), ' ', '_');
    return std::string(kWikipediaArticlePrefix) + t;
}

namespace {

std::string make_id(std::string_view prefix, std::size_t i)
{
    return prefix.empty() ? std::to_string(i) : std::string(prefix) + "-" + std::to_string(i);
}

std::vector<std::string> webq_answers(const std::string& target)
{
    static const std::regex desc(R"re(\(description\s+(?:"((?:[^"\\]|\\.)*)"|([^)]*))\))re");
    std::vector<std::string> out;
    for (std::sregex_iterator it(target.begin(), target.end(), desc), end; it != end; ++it) {
        std::string v = (*it)[1].matched ? (*it)[1].str() : std::string(trim((*it)[2].str()));
        v = replace_all(replace_all(std::move(v), "\\\"", "\""), "\\\\", "\\");
        if (!trim(v).empty()) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<DatasetRecord> convert_webq(const json& j, std::string_view prefix)
{
    std::vector<DatasetRecord> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j.at(i);
        DatasetRecord r;
        r.id = make_id(prefix, i);
        r.question = e.at("utterance").get<std::string>();
        r.answers = webq_answers(e.at("targetValue").get<std::string>());
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DatasetRecord> convert_nq(std::string_view contents, std::string_view prefix)
{
    std::vector<DatasetRecord> out;
    std::size_t start = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        auto line = trim(contents.substr(start, end - start));
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        auto e = json::parse(line);
        DatasetRecord r;
        r.id = e.contains("id") ? e.at("id").get<std::string>() : make_id(prefix, out.size());
        r.question = e.at("question").get<std::string>();
        r.answers = e.at("answer").get<std::vector<std::string>>();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DatasetRecord> convert_triviaqa(const json& j, std::string_view prefix)
{
    std::vector<DatasetRecord> out;
    const auto& data = j.at("Data");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data.at(i);
        DatasetRecord r;
        r.id = e.contains("QuestionId") ? e.at("QuestionId").get<std::string>() : make_id(prefix, i);
        r.question = e.at("Question").get<std::string>();
        const auto& ans = e.at("Answer");
        std::unordered_set<std::string> seen;
        auto add = [&](const std::string& a) {
            if (!trim(a).empty() && seen.insert(a).second) {
                r.answers.push_back(a);
            }
        };
        if (ans.contains("Value")) {
            add(ans.at("Value").get<std::string>());
        }
        if (ans.contains("Aliases")) {
            for (const auto& a : ans.at("Aliases")) {
                add(a.get<std::string>());
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DatasetRecord> convert_dpr(const json& j, std::string_view prefix)
{
    std::vector<DatasetRecord> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j.at(i);
        DatasetRecord r;
        r.id = make_id(prefix, i);
        r.question = e.at("question").get<std::string>();
        r.answers = e.at("answers").get<std::vector<std::string>>();
        if (e.contains("positive_ctxs")) {
            std::vector<std::string> urls;
            std::unordered_set<std::string> seen;
            for (const auto& ctx : e.at("positive_ctxs")) {
                if (!ctx.contains("title")) {
                    continue;
                }
                auto url = title_to_wikipedia_url(ctx.at("title").get<std::string>());
                if (seen.insert(url).second) {
                    urls.push_back(std::move(url));
                }
            }
            if (!urls.empty()) {
                r.gold_urls = std::move(urls);
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<DatasetRecord> convert_dataset(NativeFormat format, std::string_view contents, std::string_view id_prefix)
{
    try {
        std::vector<DatasetRecord> out;
        switch (format) {
        case NativeFormat::webq: out = convert_webq(json::parse(contents), id_prefix); break;
        case NativeFormat::nq: out = convert_nq(contents, id_prefix); break;
        case NativeFormat::triviaqa: out = convert_triviaqa(json::parse(contents), id_prefix); break;
        case NativeFormat::dpr: out = convert_dpr(json::parse(contents), id_prefix); break;
        }
        // Questions without a usable answer cannot be evaluated.
        std::erase_if(out, [](const DatasetRecord& r) { return r.answers.empty() || trim(r.question).empty(); });
        return out;
    } catch (const json::exception& e) {
        throw DataError(std::string("convert-dataset: ") + e.what());
    }
}

}  // namespace llmurl
