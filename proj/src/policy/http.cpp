#include "rplan/http.hpp"

#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rplan/error.hpp"

namespace rplan::http {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host:port
    std::string path;
};

SplitUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::ConfigError, "URL without scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string excerpt(const std::string& body)
{
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool is_timeout(httplib::Error e)
{
    return e == httplib::Error::Read || e == httplib::Error::Write || e == httplib::Error::ConnectionTimeout;
}

} // namespace

std::string join_url(const std::string& base, const std::string& path)
{
    if (base.empty())
        return path;
    if (base.back() == '/' && !path.empty() && path.front() == '/')
        return base + path.substr(1);
    if (base.back() != '/' && !path.empty() && path.front() != '/')
        return base + "/" + path;
    return base + path;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const RetryPolicy& retry,
                         const std::string& bearer_token)
{
    const SplitUrl target = split_url(url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(retry.timeout);
    client.set_read_timeout(retry.timeout);
    client.set_write_timeout(retry.timeout);
    httplib::Headers headers;
    if (!bearer_token.empty())
        headers.emplace("Authorization", "Bearer " + bearer_token);

    const std::string payload = body.dump();
    auto backoff = retry.initial_backoff;
    int last_status = 0;
    std::string last_body;
    std::string last_reason;
    bool all_timeouts = true;

    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * retry.backoff_multiplier));
        }
        auto res = client.Post(target.path, headers, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_body.clear();
            last_reason = httplib::to_string(res.error());
            all_timeouts = all_timeouts && is_timeout(res.error());
            spdlog::debug("POST {} attempt {} failed: {}", url, attempt + 1, last_reason);
            continue;
        }
        all_timeouts = false;
        last_status = res->status;
        last_body = res->body;
        if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw RemoteError(res->status, excerpt(res->body),
                                  "malformed JSON from " + url + ": " + e.what());
            }
        }
        last_reason = "HTTP " + std::to_string(res->status);
        const bool transient = res->status >= 500 || res->status == 429 || res->status == 408;
        spdlog::debug("POST {} attempt {}: {}", url, attempt + 1, last_reason);
        if (!transient)
            break;
    }
    if (all_timeouts && last_status == 0 && !last_reason.empty())
        throw Error(ErrorCode::TimeoutError, "POST " + url + " timed out: " + last_reason);
    throw RemoteError(last_status, excerpt(last_body), "POST " + url + " failed: " + last_reason);
}

} // namespace rplan::http
