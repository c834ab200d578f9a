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

#ifndef CRITIQUEREC_CONFIG_HPP_
#define CRITIQUEREC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace critiquerec {

/// A scalar or flat array from a config document.
struct ConfigValue {
  enum class Kind { kString, kInteger, kFloat, kBool, kArray };

  Kind kind = Kind::kString;
  std::string text;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;

  static ConfigValue String(std::string s);
  static ConfigValue Integer(std::int64_t v);
  static ConfigValue Float(double v);
  static ConfigValue Bool(bool v);

  /// TOML literal form, e.g. "\"text\"", "3", "[3, 5, 10]".
  std::string Render() const;
};

/// Subset of TOML: [section] headers, `key = value` with strings, integers,
/// floats, booleans and flat arrays, `#` comments. Keys are addressed as
/// "section.key".
class ConfigDocument {
 public:
  static ConfigDocument Parse(std::string_view text, std::string_view source = "<config>");
  static ConfigDocument Load(std::filesystem::path const& path);

  bool Has(std::string_view key) const;
  ConfigValue const* Find(std::string_view key) const;
  void Set(std::string const& key, ConfigValue value);

  std::optional<std::string> GetString(std::string_view key) const;
  std::optional<std::int64_t> GetInteger(std::string_view key) const;
  std::optional<double> GetNumber(std::string_view key) const;
  std::optional<bool> GetBool(std::string_view key) const;
  std::optional<std::vector<std::int64_t>> GetIntegerList(std::string_view key) const;
  std::optional<std::vector<double>> GetNumberList(std::string_view key) const;

  std::map<std::string, ConfigValue, std::less<>> const& values() const { return values_; }

 private:
  std::map<std::string, ConfigValue, std::less<>> values_;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_CONFIG_HPP_
