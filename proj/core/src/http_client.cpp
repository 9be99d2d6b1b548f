#include "httplib.h"

#include "llmurl/http_client.hpp"

#include "llmurl/text_util.hpp"

namespace llmurl {

std::optional<UrlOrigin> split_origin(const std::string& url)
{
    auto sep = url.find("://");
    if (sep == std::string::npos) {
        return std::nullopt;
    }
    UrlOrigin o;
    o.scheme = to_lower_ascii(url.substr(0, sep));
    if (o.scheme != "http" && o.scheme != "https") {
        return std::nullopt;
    }
    auto rest = url.substr(sep + 3);
    auto slash = rest.find_first_of("/?#");
    auto authority = rest.substr(0, slash);
    o.path_and_query = slash == std::string::npos ? "/" : rest.substr(slash);
    if (auto hash = o.path_and_query.find('#'); hash != std::string::npos) {
        o.path_and_query.erase(hash);
    }
    if (o.path_and_query.empty() || o.path_and_query[0] != '/') {
        o.path_and_query.insert(0, "/");
    }
    o.port = o.scheme == "https" ? 443 : 80;
    auto colon = authority.rfind(':');
    if (colon != std::string::npos && authority.find(']') == std::string::npos) {
        try {
            o.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            return std::nullopt;
        }
        authority.erase(colon);
    }
    o.host = to_lower_ascii(authority);
    if (o.host.empty()) {
        return std::nullopt;
    }
    return o;
}

namespace {

TransportFailure classify_error(httplib::Error err)
{
    switch (err) {
    case httplib::Error::Success: return TransportFailure::none;
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:  // read timeouts surface as Read errors
        return TransportFailure::timeout;
    default: return TransportFailure::connection;
    }
}

template <typename Client>
HttpResponse perform(Client& client, const UrlOrigin& origin, const HttpRequest& request)
{
    using namespace std::chrono;
    auto secs = duration_cast<seconds>(request.timeout);
    auto usecs = duration_cast<microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(false);

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) {
        headers.emplace(k, v);
    }

    httplib::Result res = request.method == "POST"
        ? client.Post(origin.path_and_query, headers, request.body,
                      request.content_type.empty() ? "application/json" : request.content_type)
        : client.Get(origin.path_and_query, headers);

    HttpResponse out;
    if (!res) {
        out.failure = classify_error(res.error());
        out.error_message = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) {
        out.headers[to_lower_ascii(k)] = v;
    }
    return out;
}

}  // namespace

HttpResponse NetworkHttpClient::send(const HttpRequest& request)
{
    auto origin = split_origin(request.url);
    if (!origin) {
        HttpResponse out;
        out.failure = TransportFailure::connection;
        out.error_message = "unsupported URL: " + request.url;
        return out;
    }
    ++m_requests;
    if (origin->scheme == "https") {
        httplib::SSLClient client(origin->host, origin->port);
        client.enable_server_certificate_verification(true);
        return perform(client, *origin, request);
    }
    httplib::Client client(origin->host, origin->port);
    return perform(client, *origin, request);
}

}  // namespace llmurl
