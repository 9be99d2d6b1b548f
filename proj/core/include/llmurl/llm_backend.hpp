#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "llmurl/error.hpp"
#include "llmurl/http_client.hpp"

namespace llmurl {

struct LlmParams {
    std::string model_name = "text-davinci-003";
    double temperature = 0.0;  // greedy decoding
    int max_output_tokens = 256;
    std::vector<std::string> stop_sequences;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 3;

    /// Throws ConfigError when temperature < 0, max_output_tokens < 1 or
    /// max_retries < 0.
    void validate() const;
};

enum class BackendId { live, fixture };
std::string_view to_string(BackendId id) noexcept;

struct Completion {
    std::string prompt_text;
    std::string output_text;  // exactly what the backend returned
    BackendId backend_id = BackendId::fixture;
    std::chrono::nanoseconds latency{0};
};

class BackendError : public Error {
  public:
    using Error::Error;
    [[nodiscard]] virtual std::string_view kind() const noexcept { return "backend_error"; }
};

class TimeoutError final : public BackendError {
  public:
    using BackendError::BackendError;
    [[nodiscard]] std::string_view kind() const noexcept override { return "timeout"; }
};

class RateLimited final : public BackendError {
  public:
    using BackendError::BackendError;
    [[nodiscard]] std::string_view kind() const noexcept override { return "rate_limited"; }
};

class MalformedResponse final : public BackendError {
  public:
    using BackendError::BackendError;
    [[nodiscard]] std::string_view kind() const noexcept override { return "malformed_response"; }
};

/// Connection failures and 5xx responses after retries, or non-retryable
/// HTTP errors (4xx other than 429).
class TransportError final : public BackendError {
  public:
    using BackendError::BackendError;
    [[nodiscard]] std::string_view kind() const noexcept override { return "transport_error"; }
};

class MissingFixture final : public BackendError {
  public:
    MissingFixture(std::string digest)
        : BackendError("no fixture recorded for prompt sha256 " + digest), m_digest(std::move(digest))
    {}
    [[nodiscard]] std::string_view kind() const noexcept override { return "missing_fixture"; }
    [[nodiscard]] const std::string& digest() const noexcept { return m_digest; }

  private:
    std::string m_digest;
};

class LlmBackend {
  public:
    virtual ~LlmBackend() = default;
    /// Throws a BackendError subtype on failure; `prompt` must be non-empty.
    virtual Completion complete(const std::string& prompt, const LlmParams& params) = 0;
    [[nodiscard]] virtual BackendId id() const noexcept = 0;
    /// Requests that reached the network so far.
    [[nodiscard]] virtual std::size_t network_requests() const noexcept { return 0; }
};

/// Recorded completions keyed by the SHA-256 of the exact prompt bytes.
/// File format: one JSON object per line, {"prompt_sha256": ..., "output": ...}.
class FixtureStore {
  public:
    static std::string digest(std::string_view prompt);

    void record(std::string_view prompt, std::string output);
    void record_digest(std::string digest, std::string output);
    [[nodiscard]] std::optional<std::string> lookup(std::string_view prompt) const;
    [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return m_entries; }

    /// Later lines override earlier ones. Throws DataError on malformed lines.
    static FixtureStore load(const std::filesystem::path& path);
    /// Sorted by digest, so saving is deterministic.
    void save(const std::filesystem::path& path) const;

  private:
    std::map<std::string, std::string> m_entries;
};

/// Functional form: a copy of `store` with (prompt -> output) recorded.
FixtureStore record_fixture(std::string_view prompt, std::string output, FixtureStore store);

/// Pure lookup. The store is immutable once the backend is built.
class FixtureBackend final : public LlmBackend {
  public:
    explicit FixtureBackend(FixtureStore store) : m_store(std::move(store)) {}
    Completion complete(const std::string& prompt, const LlmParams& params) override;
    [[nodiscard]] BackendId id() const noexcept override { return BackendId::fixture; }
    [[nodiscard]] const FixtureStore& store() const noexcept { return m_store; }

  private:
    const FixtureStore m_store;
};

struct LiveEndpoint {
    std::string url = "https://api.openai.com/v1/completions";
    std::string api_key;
    std::size_t max_concurrency = 4;
    std::chrono::milliseconds backoff_base{1000};
};

/// Completions-style HTTP backend: POSTs {model, prompt, temperature,
/// max_tokens, stop} and reads choices[0].text. Retries transport failures,
/// 429 and 5xx with exponential backoff (base, doubling, up to +50% jitter);
/// total attempts never exceed 1 + max_retries.
class LiveBackend final : public LlmBackend {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    LiveBackend(LiveEndpoint endpoint, std::shared_ptr<HttpClient> client, Sleeper sleeper = {},
                std::uint64_t jitter_seed = 13);

    Completion complete(const std::string& prompt, const LlmParams& params) override;
    [[nodiscard]] BackendId id() const noexcept override { return BackendId::live; }
    [[nodiscard]] std::size_t network_requests() const noexcept override { return m_requests.load(); }

    /// The exact JSON body sent for (prompt, params).
    static std::string request_body(const std::string& prompt, const LlmParams& params);

  private:
    std::chrono::milliseconds backoff_delay(int retry);

    LiveEndpoint m_endpoint;
    std::shared_ptr<HttpClient> m_client;
    Sleeper m_sleep;
    std::counting_semaphore<1024> m_slots;
    std::mutex m_rng_lock;
    std::mt19937_64 m_rng;
    std::atomic<std::size_t> m_requests{0};
};

/// Forwards to an inner backend and remembers every successful completion,
/// so live runs can be replayed offline.
class RecordingBackend final : public LlmBackend {
  public:
    explicit RecordingBackend(LlmBackend& inner) : m_inner(inner) {}
    Completion complete(const std::string& prompt, const LlmParams& params) override;
    [[nodiscard]] BackendId id() const noexcept override { return m_inner.id(); }
    [[nodiscard]] std::size_t network_requests() const noexcept override { return m_inner.network_requests(); }
    [[nodiscard]] FixtureStore recorded() const;

  private:
    LlmBackend& m_inner;
    mutable std::mutex m_lock;
    FixtureStore m_recorded;
};

}  // namespace llmurl
