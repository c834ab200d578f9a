// Copyright 2026 The critiquerec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "critiquerec/http.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "critiquerec/error.hpp"
#include "httplib.h"

namespace critiquerec {

std::chrono::milliseconds RetryPolicy::DelayBefore(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  double const scaled = static_cast<double>(initial_backoff.count()) *
                        std::pow(multiplier, static_cast<double>(attempt - 2));
  auto const capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds{static_cast<long long>(capped)};
}

HttpEndpoint HttpEndpoint::Parse(std::string const& url) {
  auto const scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
  auto const scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported URL scheme '" + scheme + "' in " + url);
  }
  auto const path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpResult PostJsonWithRetry(HttpEndpoint const& endpoint, std::string const& body,
                             std::string const& bearer_token, RetryPolicy const& policy,
                             std::chrono::seconds timeout) {
  HttpResult result;
  httplib::Client client(endpoint.base);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  int const attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    std::this_thread::sleep_for(policy.DelayBefore(attempt));
    result.attempts = attempt;
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) {
      result.status = 0;
      result.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    result.status = res->status;
    result.body = res->body;
    if (res->status >= 200 && res->status < 300) {
      result.error.clear();
      return result;
    }
    result.error = "HTTP " + std::to_string(res->status);
    if (res->status == 401 || res->status == 403) {
      result.error += " (authentication failed)";
      return result;
    }
    if (res->status != 429 && res->status < 500) return result;
  }
  result.error += " after " + std::to_string(result.attempts) + " attempts";
  return result;
}

}  // namespace critiquerec
