#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "llmurl/llm_backend.hpp"

namespace llmurl {

/// Live-mode settings. Read from an optional JSON file, then overridden by
/// environment variables:
///   LLMURL_ENDPOINT, LLMURL_API_KEY (or OPENAI_API_KEY), LLMURL_MODEL,
///   LLMURL_READER_MODEL, LLMURL_CONCURRENCY
/// File keys: endpoint, api_key, model, reader_model, concurrency,
/// max_output_tokens, stop, timeout_s, max_retries, template, user_agent.
struct AppConfig {
    LiveEndpoint endpoint;
    LlmParams retrieval_llm;
    LlmParams reader_llm;
    std::optional<std::filesystem::path> template_path;
    std::optional<std::string> user_agent;

    /// Config as recorded in run manifests; the API key is never included.
    [[nodiscard]] nlohmann::ordered_json snapshot() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Throws ConfigError on unreadable or invalid configuration.
AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

}  // namespace llmurl
