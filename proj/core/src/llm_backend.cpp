#include "llmurl/llm_backend.hpp"

#include <json.hpp>

#include <fstream>
#include <thread>

#include "llmurl/hashing.hpp"
#include "llmurl/text_util.hpp"

namespace llmurl {

using json = nlohmann::json;

void LlmParams::validate() const
{
    if (!(temperature >= 0.0)) {
        throw ConfigError("llm: temperature must be >= 0");
    }
    if (max_output_tokens < 1) {
        throw ConfigError("llm: max_output_tokens must be >= 1");
    }
    if (max_retries < 0) {
        throw ConfigError("llm: max_retries must be >= 0");
    }
}

std::string_view to_string(BackendId id) noexcept
{
    return id == BackendId::live ? "live" : "fixture";
}

// ---- fixtures ----

std::string FixtureStore::digest(std::string_view prompt)
{
    return sha256_hex(prompt);
}

void FixtureStore::record(std::string_view prompt, std::string output)
{
    m_entries[digest(prompt)] = std::move(output);
}

void FixtureStore::record_digest(std::string digest, std::string output)
{
    m_entries[std::move(digest)] = std::move(output);
}

std::optional<std::string> FixtureStore::lookup(std::string_view prompt) const
{
    auto it = m_entries.find(digest(prompt));
    if (it == m_entries.end()) {
        return std::nullopt;
    }
    return it->second;
}

FixtureStore FixtureStore::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open fixture file " + path.string());
    }
    FixtureStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto rec = json::parse(line);
            store.record_digest(rec.at("prompt_sha256").get<std::string>(), rec.at("output").get<std::string>());
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return store;
}

void FixtureStore::save(const std::filesystem::path& path) const
{
    std::string out;
    for (const auto& [digest, output] : m_entries) {
        out += json{{"prompt_sha256", digest}, {"output", output}}.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

FixtureStore record_fixture(std::string_view prompt, std::string output, FixtureStore store)
{
    store.record(prompt, std::move(output));
    return store;
}

Completion FixtureBackend::complete(const std::string& prompt, const LlmParams& params)
{
    params.validate();
    if (prompt.empty()) {
        throw BackendError("complete: empty prompt");
    }
    auto start = std::chrono::steady_clock::now();
    auto hit = m_store.lookup(prompt);
    if (!hit) {
        throw MissingFixture(FixtureStore::digest(prompt));
    }
    return Completion{prompt, *hit, BackendId::fixture, std::chrono::steady_clock::now() - start};
}

// ---- live ----

LiveBackend::LiveBackend(LiveEndpoint endpoint, std::shared_ptr<HttpClient> client, Sleeper sleeper,
                         std::uint64_t jitter_seed)
    : m_endpoint(std::move(endpoint))
    , m_client(std::move(client))
    , m_sleep(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }))
    , m_slots(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(m_endpoint.max_concurrency, 1, 1024)))
    , m_rng(jitter_seed)
{
    if (!m_client) {
        throw ConfigError("live backend needs an HTTP client");
    }
}

std::string LiveBackend::request_body(const std::string& prompt, const LlmParams& params)
{
    json body{{"model", params.model_name},
              {"prompt", prompt},
              {"temperature", params.temperature},
              {"max_tokens", params.max_output_tokens}};
    if (!params.stop_sequences.empty()) {
        body["stop"] = params.stop_sequences;
    }
    try {
        return body.dump();
    } catch (const json::type_error& e) {
        throw BackendError(std::string("prompt is not valid UTF-8: ") + e.what());
    }
}

std::chrono::milliseconds LiveBackend::backoff_delay(int retry)
{
    auto base = m_endpoint.backoff_base * (std::int64_t{1} << std::min(retry, 20));
    std::lock_guard lock(m_rng_lock);
    std::uniform_int_distribution<std::int64_t> jitter(0, base.count() / 2);
    return base + std::chrono::milliseconds(jitter(m_rng));
}

namespace {

struct SlotGuard {
    std::counting_semaphore<1024>& sem;
    explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

std::string parse_completion_text(const std::string& body)
{
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("completion response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()
        || !j["choices"][0].is_object() || !j["choices"][0].contains("text")
        || !j["choices"][0]["text"].is_string()) {
        throw MalformedResponse("completion response lacks choices[0].text");
    }
    return j["choices"][0]["text"].get<std::string>();
}

}  // namespace

Completion LiveBackend::complete(const std::string& prompt, const LlmParams& params)
{
    params.validate();
    if (prompt.empty()) {
        throw BackendError("complete: empty prompt");
    }
    HttpRequest req;
    req.method = "POST";
    req.url = m_endpoint.url;
    req.body = request_body(prompt, params);
    req.content_type = "application/json";
    req.timeout = params.request_timeout;
    if (!m_endpoint.api_key.empty()) {
        req.headers["Authorization"] = "Bearer " + m_endpoint.api_key;
    }

    const auto start = std::chrono::steady_clock::now();
    HttpResponse last;
    int timeouts = 0;
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
        if (attempt > 0) {
            m_sleep(backoff_delay(attempt - 1));
        }
        {
            SlotGuard slot(m_slots);
            ++m_requests;
            last = m_client->send(req);
        }
        timeouts += last.failure == TransportFailure::timeout ? 1 : 0;
        if (last.transport_ok() && last.status >= 200 && last.status < 300) {
            return Completion{prompt, parse_completion_text(last.body), BackendId::live,
                              std::chrono::steady_clock::now() - start};
        }
        bool retryable = !last.transport_ok() || last.status == 429 || last.status >= 500;
        if (!retryable) {
            throw TransportError("completion endpoint returned HTTP " + std::to_string(last.status));
        }
    }
    const auto attempts = std::to_string(params.max_retries + 1);
    if (timeouts == params.max_retries + 1) {
        throw TimeoutError("completion timed out on all " + attempts + " attempts");
    }
    if (last.transport_ok() && last.status == 429) {
        throw RateLimited("completion endpoint still throttling after " + attempts + " attempts");
    }
    if (!last.transport_ok()) {
        throw TransportError("completion endpoint unreachable: " + last.error_message);
    }
    throw TransportError("completion endpoint returned HTTP " + std::to_string(last.status) + " after "
                         + attempts + " attempts");
}

// ---- recording ----

Completion RecordingBackend::complete(const std::string& prompt, const LlmParams& params)
{
    auto c = m_inner.complete(prompt, params);
    std::lock_guard lock(m_lock);
    m_recorded.record(prompt, c.output_text);
    return c;
}

FixtureStore RecordingBackend::recorded() const
{
    std::lock_guard lock(m_lock);
    return m_recorded;
}

}  // namespace llmurl
