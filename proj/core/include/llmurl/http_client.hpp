#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <optional>
#include <string>

namespace llmurl {

struct HttpRequest {
    std::string method = "GET";
    std::string url;  // absolute http:// or https:// URL
    std::map<std::string, std::string> headers;
    std::string body;
    std::string content_type;
    std::chrono::milliseconds timeout{30000};
};

enum class TransportFailure { none, timeout, connection };

struct HttpResponse {
    TransportFailure failure = TransportFailure::none;
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;  // lowercased names
    std::string error_message;
    [[nodiscard]] bool transport_ok() const noexcept { return failure == TransportFailure::none; }
};

/// Minimal synchronous HTTP client. Redirects are never followed here;
/// callers that need them handle Location themselves.
class HttpClient {
  public:
    virtual ~HttpClient() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// cpp-httplib backed client (plain HTTP and HTTPS). Counts every request
/// that reaches the network.
class NetworkHttpClient final : public HttpClient {
  public:
    HttpResponse send(const HttpRequest& request) override;
    [[nodiscard]] std::size_t requests_sent() const noexcept { return m_requests.load(); }

  private:
    std::atomic<std::size_t> m_requests{0};
};

struct UrlOrigin {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path_and_query;
};

/// Splits an absolute http(s) URL for connection purposes.
std::optional<UrlOrigin> split_origin(const std::string& url);

}  // namespace llmurl
