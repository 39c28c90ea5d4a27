#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace rplan::http {

struct RetryPolicy {
    // Attempts = 1 + max_retries.
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{200};
    double backoff_multiplier = 2.0;
    std::chrono::seconds timeout{60};
};

// POSTs `body` as JSON to `url` (scheme://host[:port]/path) and returns the parsed response.
// 5xx, 429 and transport failures are retried with exponential backoff. Throws RemoteError
// (status + body excerpt) or, when every attempt timed out, TimeoutError. A 2xx body that is not
// JSON is a RemoteError with the parser's diagnostic.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const RetryPolicy& retry,
                         const std::string& bearer_token = {});

// "http://h:1/v1" + "/chat/completions" without doubling slashes.
std::string join_url(const std::string& base, const std::string& path);

} // namespace rplan::http
