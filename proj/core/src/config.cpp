#include "llmurl/config.hpp"

#include <cstdlib>

#include "llmurl/error.hpp"
#include "llmurl/text_util.hpp"

namespace llmurl {

using json = nlohmann::json;

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') {
        return std::string(v);
    }
    return std::nullopt;
}

AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env)
{
    AppConfig cfg;
    std::optional<std::string> reader_model;
    if (file) {
        json j;
        try {
            j = json::parse(read_file(*file));
            if (!j.is_object()) {
                throw ConfigError(file->string() + ": expected a JSON object");
            }
            cfg.endpoint.url = j.value("endpoint", cfg.endpoint.url);
            cfg.endpoint.api_key = j.value("api_key", cfg.endpoint.api_key);
            cfg.endpoint.max_concurrency = j.value("concurrency", cfg.endpoint.max_concurrency);
            cfg.retrieval_llm.model_name = j.value("model", cfg.retrieval_llm.model_name);
            if (j.contains("reader_model")) {
                reader_model = j.at("reader_model").get<std::string>();
            }
            cfg.retrieval_llm.max_output_tokens = j.value("max_output_tokens", cfg.retrieval_llm.max_output_tokens);
            cfg.retrieval_llm.stop_sequences = j.value("stop", cfg.retrieval_llm.stop_sequences);
            cfg.retrieval_llm.max_retries = j.value("max_retries", cfg.retrieval_llm.max_retries);
            if (j.contains("timeout_s")) {
                cfg.retrieval_llm.request_timeout =
                    std::chrono::milliseconds(static_cast<long long>(j.at("timeout_s").get<double>() * 1000));
            }
            if (j.contains("template")) {
                cfg.template_path = file->parent_path() / j.at("template").get<std::string>();
            }
            if (j.contains("user_agent")) {
                cfg.user_agent = j.at("user_agent").get<std::string>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(file->string() + ": " + e.what());
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (auto v = env("LLMURL_ENDPOINT")) cfg.endpoint.url = *v;
    if (auto v = env("OPENAI_API_KEY")) cfg.endpoint.api_key = *v;
    if (auto v = env("LLMURL_API_KEY")) cfg.endpoint.api_key = *v;
    if (auto v = env("LLMURL_MODEL")) cfg.retrieval_llm.model_name = *v;
    if (auto v = env("LLMURL_READER_MODEL")) reader_model = *v;
    if (auto v = env("LLMURL_CONCURRENCY")) {
        try {
            cfg.endpoint.max_concurrency = static_cast<std::size_t>(std::stoul(*v));
        } catch (const std::exception&) {
            throw ConfigError("LLMURL_CONCURRENCY must be a positive integer");
        }
    }
    if (cfg.endpoint.max_concurrency == 0) {
        throw ConfigError("concurrency must be >= 1");
    }
    cfg.retrieval_llm.validate();
    cfg.reader_llm = cfg.retrieval_llm;
    if (reader_model) {
        cfg.reader_llm.model_name = *reader_model;
    }
    return cfg;
}

nlohmann::ordered_json AppConfig::snapshot() const
{
    nlohmann::ordered_json j{{"endpoint", endpoint.url},
                             {"api_key_set", !endpoint.api_key.empty()},
                             {"concurrency", endpoint.max_concurrency},
                             {"model", retrieval_llm.model_name},
                             {"reader_model", reader_llm.model_name},
                             {"temperature", retrieval_llm.temperature},
                             {"max_output_tokens", retrieval_llm.max_output_tokens},
                             {"stop", retrieval_llm.stop_sequences},
                             {"timeout_ms", retrieval_llm.request_timeout.count()},
                             {"max_retries", retrieval_llm.max_retries}};
    j["template"] = template_path ? template_path->string() : std::string("embedded default");
    return j;
}

}  // namespace llmurl
