#pragma once

#include <fmt/format.h>

#include <chrono>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "entangle/error.hpp"

namespace entangle {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

inline ParsedUrl parse_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos)
    throw Error(ErrorCode::config_error, fmt::format("URL '{}' has no scheme", url));
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw Error(ErrorCode::config_error, fmt::format("URL '{}' must be http or https", url));
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  ParsedUrl out;
  out.origin = std::string(url.substr(0, scheme_end + 3)) + std::string(rest.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (rest.substr(0, slash).empty())
    throw Error(ErrorCode::config_error, fmt::format("URL '{}' has no host", url));
  return out;
}

struct HttpCallOptions {
  std::string api_key;
  double timeout_seconds = 60.0;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};
};

/// POSTs a JSON body and returns the parsed JSON response. Connection
/// failures, 429 and 5xx are retried; other non-2xx statuses are refusals.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                const HttpCallOptions& opts, int* attempts_used = nullptr) {
  auto target = parse_url(url);
  const int attempts = std::max(1, opts.max_attempts);
  std::string last_error;
  ErrorCode last_code = ErrorCode::provider_unavailable;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(target.origin);
    auto secs = std::chrono::duration<double>(opts.timeout_seconds);
    auto usec = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    httplib::Headers headers;
    if (!opts.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts.api_key);
    auto res = client.Post(target.path, headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      last_code = err == httplib::Error::Read || err == httplib::Error::Write ||
                          err == httplib::Error::ConnectionTimeout
                      ? ErrorCode::provider_timeout
                      : ErrorCode::provider_unavailable;
      last_error = fmt::format("{} unreachable: {}", url, httplib::to_string(err));
    } else if (res->status >= 200 && res->status < 300) {
      if (attempts_used) *attempts_used = attempt;
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ProviderError(ErrorCode::provider_unavailable,
                            fmt::format("{} returned malformed JSON: {}", url, e.what()), attempt);
      }
    } else if (res->status == 429 || res->status >= 500) {
      last_code = res->status == 504 ? ErrorCode::provider_timeout : ErrorCode::provider_unavailable;
      last_error = fmt::format("{} answered HTTP {}", url, res->status);
    } else {
      throw ProviderError(ErrorCode::provider_refusal,
                          fmt::format("{} refused the request with HTTP {}: {}", url, res->status,
                                      res->body.substr(0, 200)),
                          attempt);
    }
    if (attempt < attempts) std::this_thread::sleep_for(opts.backoff * attempt);
  }
  throw ProviderError(last_code, fmt::format("{} (after {} attempts)", last_error, attempts), attempts);
}

}  // namespace entangle
