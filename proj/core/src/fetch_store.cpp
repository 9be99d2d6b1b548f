#include "llmurl/fetch_store.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <thread>

#include "llmurl/error.hpp"
#include "llmurl/hashing.hpp"
#include "llmurl/html_text.hpp"
#include "llmurl/text_util.hpp"
#include "llmurl/url_extract.hpp"

namespace llmurl {

using json = nlohmann::json;

#ifndef LLMURL_VERSION
#define LLMURL_VERSION "dev"
#endif

std::string default_user_agent()
{
    return std::string("llmurl/") + LLMURL_VERSION
        + " (document retrieval evaluation; low-rate research fetcher)";
}

std::string_view to_string(FetchStatus status) noexcept
{
    switch (status) {
    case FetchStatus::ok: return "ok";
    case FetchStatus::not_found: return "not_found";
    case FetchStatus::transport_error: return "transport_error";
    case FetchStatus::skipped: return "skipped";
    }
    return "skipped";
}

FetchStatus fetch_status_from_string(std::string_view s)
{
    if (s == "ok") return FetchStatus::ok;
    if (s == "not_found") return FetchStatus::not_found;
    if (s == "transport_error") return FetchStatus::transport_error;
    if (s == "skipped") return FetchStatus::skipped;
    throw DataError("unknown fetch status: " + std::string(s));
}

// ---- ResponseCache ----

ResponseCache::ResponseCache(std::filesystem::path dir) : m_dir(std::move(dir))
{
    std::filesystem::create_directories(m_dir);
}

ResponseCache::~ResponseCache()
{
    try {
        if (m_dirty) {
            flush();
        }
    } catch (...) {
    }
}

std::string ResponseCache::key_for(std::string_view url)
{
    return sha256_hex(url);
}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const
{
    return m_dir / (key + ".entry");
}

std::mutex& ResponseCache::lock_for(const std::string& key) const
{
    return m_key_locks[std::hash<std::string>{}(key) % m_key_locks.size()];
}

namespace {

std::optional<CacheEntry> read_entry(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::string header;
    std::getline(in, header);
    json h;
    try {
        h = json::parse(header);
    } catch (const json::exception& e) {
        throw DataError("corrupt cache entry " + path.string() + ": " + e.what());
    }
    CacheEntry e;
    e.key = h.at("key").get<std::string>();
    e.url = h.at("url").get<std::string>();
    e.status_code = h.at("status_code").get<int>();
    e.stored_at = h.at("stored_at").get<long long>();
    auto n = h.at("body_bytes").get<std::size_t>();
    e.body.resize(n);
    in.read(e.body.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw DataError("truncated cache entry " + path.string());
    }
    return e;
}

json entry_header(const CacheEntry& e)
{
    return json{{"key", e.key},
                {"url", e.url},
                {"status_code", e.status_code},
                {"stored_at", e.stored_at},
                {"body_bytes", e.body.size()}};
}

}  // namespace

std::optional<CacheEntry> ResponseCache::load(std::string_view url) const
{
    auto key = key_for(url);
    std::lock_guard lock(lock_for(key));
    return read_entry(entry_path(key));
}

void ResponseCache::store(CacheEntry entry)
{
    entry.key = key_for(entry.url);
    std::string contents = entry_header(entry).dump();
    contents.push_back('\n');
    contents += entry.body;
    {
        std::lock_guard lock(lock_for(entry.key));
        write_file_atomic(entry_path(entry.key), contents);
    }
    std::lock_guard lock(m_manifest_lock);
    m_dirty = true;
}

void ResponseCache::flush() const
{
    json entries = json::object();
    for (const auto& f : std::filesystem::directory_iterator(m_dir)) {
        if (f.path().extension() != ".entry") {
            continue;
        }
        auto e = read_entry(f.path());
        if (!e) {
            continue;
        }
        auto h = entry_header(*e);
        h.erase("key");
        entries[e->key] = std::move(h);
    }
    json manifest{{"format", "llmurl-cache/1"}, {"entries", std::move(entries)}};
    std::lock_guard lock(m_manifest_lock);
    write_file_atomic(m_dir / "manifest.json", manifest.dump(2) + "\n");
    m_dirty = false;
}

std::size_t ResponseCache::size() const
{
    std::size_t n = 0;
    for (const auto& f : std::filesystem::directory_iterator(m_dir)) {
        n += f.path().extension() == ".entry" ? 1 : 0;
    }
    return n;
}

// ---- Documents ----

Document document_from_response(const std::string& url, int status_code, const std::string& body,
                                long long fetched_at, bool from_cache)
{
    Document d;
    d.url = url;
    d.fetched_at = fetched_at;
    d.from_cache = from_cache;
    d.html = body;
    if (status_code >= 200 && status_code < 300) {
        d.fetch_status = FetchStatus::ok;
        try {
            d.text = extract_text(body);
        } catch (const EmptyDocument&) {
            d.text = std::string();  // page exists but has no prose
        }
        d.word_count = split_words(*d.text).size();
    } else if (status_code == 404 || status_code == 410) {
        d.fetch_status = FetchStatus::not_found;
    } else {
        d.fetch_status = FetchStatus::transport_error;
    }
    return d;
}

// ---- Fetcher ----

Fetcher::Fetcher(ResponseCache& cache, HttpClient* client, FetchPolicy policy)
    : m_cache(cache), m_client(client), m_policy(std::move(policy))
{
    if (m_policy.parallelism == 0) {
        m_policy.parallelism = 1;
    }
}

void Fetcher::wait_for_host(const std::string& host)
{
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(m_host_lock);
        auto now = std::chrono::steady_clock::now();
        auto& next = m_next_slot[host];
        slot = std::max(now, next);
        next = slot + m_policy.delay;
    }
    std::this_thread::sleep_until(slot);
}

HttpResponse Fetcher::send_throttled(const std::string& url)
{
    auto origin = split_origin(url);
    if (origin) {
        wait_for_host(origin->host);
    }
    HttpRequest req;
    req.method = "GET";
    req.url = url;
    req.timeout = m_policy.timeout;
    req.headers["User-Agent"] = m_policy.user_agent;
    req.headers["Accept"] = "text/html";
    ++m_network_requests;
    return m_client->send(req);
}

namespace {

std::string resolve_location(const std::string& base, const std::string& location)
{
    if (location.find("://") != std::string::npos) {
        return location;
    }
    auto origin = split_origin(base);
    if (!origin) {
        return location;
    }
    if (location.rfind("//", 0) == 0) {
        return origin->scheme + ":" + location;
    }
    std::string root = origin->scheme + "://" + origin->host;
    bool default_port = (origin->scheme == "https" && origin->port == 443)
        || (origin->scheme == "http" && origin->port == 80);
    if (!default_port) {
        root += ":" + std::to_string(origin->port);
    }
    if (!location.empty() && location.front() == '/') {
        return root + location;
    }
    auto path = origin->path_and_query.substr(0, origin->path_and_query.rfind('/') + 1);
    return root + path + location;
}

bool is_redirect(int status)
{
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

bool is_cacheable(int status)
{
    return (status >= 200 && status < 300) || status == 404 || status == 410;
}

}  // namespace

Document Fetcher::fetch(const std::string& url)
{
    if (auto hit = m_cache.load(url)) {
        ++m_hits;
        return document_from_response(url, hit->status_code, hit->body, hit->stored_at, true);
    }
    ++m_misses;
    if (m_policy.offline || m_client == nullptr) {
        std::lock_guard lock(m_skipped_lock);
        m_skipped.push_back(url);
        Document d;
        d.url = url;
        d.fetch_status = FetchStatus::skipped;
        return d;
    }

    HttpResponse last;
    for (int attempt = 0; attempt <= m_policy.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(m_policy.retry_backoff * (1 << (attempt - 1)));
        }
        std::string target = url;
        last = send_throttled(target);
        for (int hop = 0; hop < m_policy.max_redirects && last.transport_ok() && is_redirect(last.status);
             ++hop) {
            auto loc = last.headers.find("location");
            if (loc == last.headers.end()) {
                break;
            }
            target = resolve_location(target, loc->second);
            last = send_throttled(target);
        }
        bool transient = !last.transport_ok() || last.status == 429 || last.status >= 500;
        if (!transient) {
            break;
        }
    }

    if (!last.transport_ok()) {
        Document d;
        d.url = url;
        d.fetch_status = FetchStatus::transport_error;
        d.fetched_at = unix_now();
        return d;
    }
    long long now = unix_now();
    if (is_cacheable(last.status)) {
        m_cache.store(CacheEntry{"", url, last.status, last.body, now});
    }
    return document_from_response(url, last.status, last.body, now, false);
}

std::vector<Document> Fetcher::fetch_all(std::span<const std::string> urls)
{
    std::vector<Document> out(urls.size());
    if (urls.empty()) {
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < urls.size(); i = next++) {
            out[i] = fetch(urls[i]);
        }
    };
    std::size_t workers = std::min(m_policy.parallelism, urls.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    return out;
}

FetchStats Fetcher::stats() const
{
    FetchStats s;
    s.cache_hits = m_hits.load();
    s.cache_misses = m_misses.load();
    s.network_requests = m_network_requests.load();
    std::lock_guard lock(m_skipped_lock);
    s.skipped_urls = m_skipped;
    return s;
}

// ---- Snapshot import ----

SnapshotImport import_snapshot(ResponseCache& cache, const std::filesystem::path& listing)
{
    std::ifstream in(listing);
    if (!in) {
        throw DataError("cannot open snapshot listing " + listing.string());
    }
    auto base = listing.parent_path();
    SnapshotImport result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto rec = json::parse(line);
            CacheEntry e;
            e.url = normalize_url(rec.at("url").get<std::string>());
            e.status_code = rec.at("status").get<int>();
            e.stored_at = rec.value("stored_at", 0LL);
            if (rec.contains("file")) {
                e.body = read_file(base / rec.at("file").get<std::string>());
            }
            cache.store(std::move(e));
            ++result.imported;
        } catch (const json::exception& ex) {
            throw DataError(listing.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    cache.flush();
    return result;
}

}  // namespace llmurl
