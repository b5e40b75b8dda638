#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gendfir/error.hpp"

namespace gendfir::http {

using Json = nlohmann::json;

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // always starts with '/'
};

/// Splits "http://host:port/a/b" into base and path. Only plain http is supported.
inline Endpoint parse_url(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (url.substr(0, scheme.size()) != scheme) {
        throw Error(ErrorCode::InvalidConfig, "endpoint must start with http:// (got \"" + std::string(url) + "\")");
    }
    std::size_t slash = url.find('/', scheme.size());
    Endpoint ep;
    ep.base = std::string(url.substr(0, slash));
    ep.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
    if (ep.base.size() == scheme.size()) throw Error(ErrorCode::InvalidConfig, "endpoint has no host");
    return ep;
}

struct RetryPolicy {
    int retries = 3;
    std::chrono::milliseconds initial_backoff{250};
};

struct RequestOptions {
    std::chrono::milliseconds timeout{30000};
    std::string bearer_token;
    RetryPolicy retry;
};

/// POSTs a JSON body and parses the JSON reply. Connection failures, 429 and
/// 5xx are retried with doubling backoff; anything else fails immediately.
/// `failure` is the error code raised once retries are exhausted.
inline Json post_json(const std::string& url, const Json& body, const RequestOptions& opts, ErrorCode failure) {
    Endpoint ep = parse_url(url);
    httplib::Client client(ep.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!opts.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + opts.bearer_token);
    const std::string payload = body.dump();

    std::string last_error;
    auto backoff = opts.retry.initial_backoff;
    const int attempts = 1 + std::max(0, opts.retry.retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(ep.path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            try {
                return Json::parse(res->body);
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
            }
        }
        bool retryable = !res || res->status == 429 || res->status >= 500;
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (!retryable) {
            throw Error(failure, url + " answered " + last_error + " (not retried)");
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error(failure, url + " failed after " + std::to_string(attempts) + " attempts (" +
                             std::to_string(opts.retry.retries) + " retries): " + last_error);
}

}  // namespace gendfir::http
