#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmurl/document.hpp"
#include "llmurl/http_client.hpp"

namespace llmurl {

std::string default_user_agent();

struct FetchPolicy {
    std::size_t parallelism = 4;
    std::chrono::milliseconds delay{200};  // minimum spacing between requests to one host
    bool offline = false;
    std::chrono::seconds timeout{30};
    int max_retries = 2;
    int max_redirects = 5;
    std::chrono::milliseconds retry_backoff{1000};
    std::string user_agent = default_user_agent();
};

struct CacheEntry {
    std::string key;  // sha256 of the normalized URL
    std::string url;
    int status_code = 0;
    std::string body;
    long long stored_at = 0;
};

/// Content-addressed response cache: `<dir>/<key>.entry` holds a one-line
/// JSON header followed by the raw body bytes; `<dir>/manifest.json` indexes
/// all entries. Entry files are self-describing, so a stale manifest never
/// hides an entry.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir);
    ~ResponseCache();

    ResponseCache(const ResponseCache&) = delete;
    ResponseCache& operator=(const ResponseCache&) = delete;

    static std::string key_for(std::string_view url);

    [[nodiscard]] std::optional<CacheEntry> load(std::string_view url) const;
    void store(CacheEntry entry);

    /// Rewrites manifest.json from the entries present on disk.
    void flush() const;

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return m_dir; }
    [[nodiscard]] std::size_t size() const;

  private:
    [[nodiscard]] std::filesystem::path entry_path(const std::string& key) const;
    std::mutex& lock_for(const std::string& key) const;

    std::filesystem::path m_dir;
    mutable std::array<std::mutex, 64> m_key_locks;
    mutable std::mutex m_manifest_lock;
    mutable bool m_dirty = false;
};

/// Turns a cached or freshly fetched response into a Document.
Document document_from_response(const std::string& url, int status_code, const std::string& body,
                                long long fetched_at, bool from_cache);

struct FetchStats {
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::size_t network_requests = 0;
    std::vector<std::string> skipped_urls;  // offline cache misses
};

class Fetcher {
  public:
    /// `client` may be null; then every cache miss is treated as offline.
    Fetcher(ResponseCache& cache, HttpClient* client, FetchPolicy policy);

    /// Never throws for per-URL failures; they are encoded in fetch_status.
    Document fetch(const std::string& url);

    /// Output order matches input order; at most policy.parallelism in flight.
    std::vector<Document> fetch_all(std::span<const std::string> urls);

    [[nodiscard]] FetchStats stats() const;
    [[nodiscard]] std::size_t network_requests() const noexcept { return m_network_requests.load(); }
    [[nodiscard]] const FetchPolicy& policy() const noexcept { return m_policy; }

  private:
    HttpResponse send_throttled(const std::string& url);
    void wait_for_host(const std::string& host);

    ResponseCache& m_cache;
    HttpClient* m_client;
    FetchPolicy m_policy;

    std::mutex m_host_lock;
    std::map<std::string, std::chrono::steady_clock::time_point> m_next_slot;

    std::atomic<std::size_t> m_hits{0};
    std::atomic<std::size_t> m_misses{0};
    std::atomic<std::size_t> m_network_requests{0};
    mutable std::mutex m_skipped_lock;
    std::vector<std::string> m_skipped;
};

struct SnapshotImport {
    std::size_t imported = 0;
};

/// Loads a local page snapshot into the cache. `listing` is JSONL with
/// records {url, status, file[, stored_at]}; `file` is relative to the
/// listing's directory and may be omitted for bodiless statuses.
SnapshotImport import_snapshot(ResponseCache& cache, const std::filesystem::path& listing);

}  // namespace llmurl
