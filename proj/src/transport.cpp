// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/transport.hpp"

#include <curl/curl.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <memory>
#include <thread>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {
namespace {

std::size_t append_body(char* data, std::size_t size, std::size_t n,
                        void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

bool retriable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

CurlTransport::CurlTransport(std::chrono::seconds timeout) : timeout_(timeout) {
  static const bool initialized = [] {
    return curl_global_init(CURL_GLOBAL_DEFAULT) == CURLE_OK;
  }();
  if (!initialized) throw NetworkError("curl initialisation failed", 0, false);
}

HttpResponse CurlTransport::get(const HttpRequest& request) {
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(),
                                                          curl_easy_cleanup);
  if (!curl) throw NetworkError("curl_easy_init failed", 0, true);
  curl_slist* raw_headers = nullptr;
  for (const auto& [k, v] : request.headers) {
    raw_headers = curl_slist_append(raw_headers, (k + ": " + v).c_str());
  }
  std::unique_ptr<curl_slist, decltype(&curl_slist_free_all)> headers(
      raw_headers, curl_slist_free_all);

  HttpResponse response;
  curl_easy_setopt(curl.get(), CURLOPT_URL, request.url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, headers.get());
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response.body);
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT,
                   static_cast<long>(timeout_.count()));
  curl_easy_setopt(curl.get(), CURLOPT_USERAGENT, "flowdisagg/1.0");
  const CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) {
    throw NetworkError(std::string("request failed: ") +
                           curl_easy_strerror(rc),
                       0, true);
  }
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  response.status = static_cast<int>(status);
  return response;
}

HttpResponse OfflineTransport::get(const HttpRequest& request) {
  throw NetworkError("network access disabled (--offline): " + request.url, 0,
                     false);
}

void CannedTransport::add_route(std::string url_prefix, HttpResponse response) {
  routes_.emplace_back(std::move(url_prefix), std::move(response));
}

HttpResponse CannedTransport::get(const HttpRequest& request) {
  requests_.push_back(request);
  for (const auto& [prefix, response] : routes_) {
    if (request.url.rfind(prefix, 0) == 0) return response;
  }
  return {404, "no canned route"};
}

HttpResponse get_with_retry(Transport& transport, const HttpRequest& request,
                            const RetryPolicy& policy) {
  const int attempts = std::max(policy.attempts, 1);
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    const bool last = attempt == attempts;
    try {
      HttpResponse r = transport.get(request);
      if (r.status >= 200 && r.status < 300) return r;
      if (!retriable_status(r.status) || last) {
        throw NetworkError("HTTP " + std::to_string(r.status) + " from " +
                               request.url,
                           r.status, retriable_status(r.status));
      }
    } catch (const NetworkError& e) {
      if (!e.retriable() || last) throw;
    }
    if (policy.sleep) {
      policy.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
}

std::string url_encode(const std::string& text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string build_url(
    const std::string& base,
    const std::vector<std::pair<std::string, std::string>>& query) {
  std::string url = base;
  char sep = '?';
  for (const auto& [k, v] : query) {
    url += sep;
    url += k + "=" + url_encode(v);
    sep = '&';
  }
  return url;
}

}  // namespace flowdisagg
