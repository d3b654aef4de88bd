// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace flowdisagg {

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Blocking HTTP GET. Implementations throw NetworkError when no response
/// arrives; non-2xx responses are returned, not thrown.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const HttpRequest& request) = 0;
};

/// libcurl-backed HTTPS transport.
class CurlTransport final : public Transport {
 public:
  explicit CurlTransport(std::chrono::seconds timeout = std::chrono::seconds{60});
  HttpResponse get(const HttpRequest& request) override;

 private:
  std::chrono::seconds timeout_;
};

/// Refuses every request. Used for --offline.
class OfflineTransport final : public Transport {
 public:
  HttpResponse get(const HttpRequest& request) override;
};

/// Serves canned bodies keyed by URL prefix; counts calls. Requests that match
/// no route get a 404.
class CannedTransport final : public Transport {
 public:
  void add_route(std::string url_prefix, HttpResponse response);
  HttpResponse get(const HttpRequest& request) override;

  std::size_t calls() const noexcept { return requests_.size(); }
  const std::vector<HttpRequest>& requests() const noexcept {
    return requests_;
  }

 private:
  std::vector<std::pair<std::string, HttpResponse>> routes_;
  std::vector<HttpRequest> requests_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  /// Injected so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// GET with bounded retry and exponential backoff. Transport failures, 429 and
/// 5xx are retried; after the last attempt, or on any other non-2xx status, a
/// NetworkError carrying the status is thrown.
HttpResponse get_with_retry(Transport& transport, const HttpRequest& request,
                            const RetryPolicy& policy);

std::string url_encode(const std::string& text);

/// `base?k1=v1&k2=v2` with encoded values, in the given order.
std::string build_url(
    const std::string& base,
    const std::vector<std::pair<std::string, std::string>>& query);

}  // namespace flowdisagg
