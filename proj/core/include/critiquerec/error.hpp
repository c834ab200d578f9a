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

#ifndef CRITIQUEREC_ERROR_HPP_
#define CRITIQUEREC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace critiquerec {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or invalid dataset input.
class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Bad on-disk format: wrong magic, version, or truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A model and an embedding provider disagree on how inputs were embedded.
class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

/// Transport, HTTP, or protocol failure talking to a remote service.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Free text that could not be turned into a ranked list.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_ERROR_HPP_
