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

#ifndef CRITIQUEREC_HTTP_HPP_
#define CRITIQUEREC_HTTP_HPP_

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace critiquerec {

/// Exponential backoff between attempts of one logical request.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  /// Delay before attempt `attempt` (1-based; attempt 1 has no delay).
  std::chrono::milliseconds DelayBefore(int attempt) const;
};

struct HttpEndpoint {
  /// Scheme, host and optional port, e.g. "http://127.0.0.1:8080".
  std::string base;
  /// Request path, e.g. "/v1/chat/completions".
  std::string path;

  /// Splits a full URL. Throws ConfigError on anything but http(s)://.
  static HttpEndpoint Parse(std::string const& url);
};

struct HttpResult {
  int status = 0;  // 0 when no response was received
  std::string body;
  int attempts = 0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// POSTs a JSON body, retrying transport failures, 429 and 5xx responses.
/// 401/403 and other 4xx responses fail immediately.
HttpResult PostJsonWithRetry(HttpEndpoint const& endpoint, std::string const& body,
                             std::string const& bearer_token, RetryPolicy const& policy,
                             std::chrono::seconds timeout = std::chrono::seconds(60));

}  // namespace critiquerec

#endif  // CRITIQUEREC_HTTP_HPP_
