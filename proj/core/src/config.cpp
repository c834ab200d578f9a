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

#include "critiquerec/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "critiquerec/error.hpp"

namespace critiquerec {

ConfigValue ConfigValue::String(std::string s) {
  ConfigValue v;
  v.kind = Kind::kString;
  v.text = std::move(s);
  return v;
}

ConfigValue ConfigValue::Integer(std::int64_t i) {
  ConfigValue v;
  v.kind = Kind::kInteger;
  v.integer = i;
  v.number = static_cast<double>(i);
  return v;
}

ConfigValue ConfigValue::Float(double d) {
  ConfigValue v;
  v.kind = Kind::kFloat;
  v.number = d;
  return v;
}

ConfigValue ConfigValue::Bool(bool b) {
  ConfigValue v;
  v.kind = Kind::kBool;
  v.boolean = b;
  return v;
}

std::string ConfigValue::Render() const {
  switch (kind) {
    case Kind::kString: {
      std::string out = "\"";
      for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out += c;
      }
      return out + "\"";
    }
    case Kind::kInteger:
      return std::to_string(integer);
    case Kind::kFloat: {
      char buf[64];
      auto const res = std::to_chars(buf, buf + sizeof buf, number);
      std::string s(buf, res.ptr);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    case Kind::kBool:
      return boolean ? "true" : "false";
    case Kind::kArray: {
      std::string out = "[";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i].Render();
      }
      return out + "]";
    }
  }
  return {};
}

namespace {

class LineParser {
 public:
  LineParser(std::string_view text, std::string where) : s_(text), where_(std::move(where)) {}

  void SkipSpace() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool AtCommentOrEnd() {
    SkipSpace();
    return pos_ >= s_.size() || s_[pos_] == '#' || s_[pos_] == '\r';
  }
  [[noreturn]] void Fail(std::string const& what) const {
    throw ConfigError(where_ + ": " + what);
  }

  std::string Key() {
    SkipSpace();
    std::size_t const start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_' || s_[pos_] == '-' || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ == start) Fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  void Expect(char c) {
    SkipSpace();
    if (pos_ >= s_.size() || s_[pos_] != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  ConfigValue Value() {
    SkipSpace();
    if (pos_ >= s_.size()) Fail("missing value");
    char const c = s_[pos_];
    if (c == '"') return ConfigValue::String(QuotedString());
    if (c == '[') {
      ++pos_;
      ConfigValue arr;
      arr.kind = ConfigValue::Kind::kArray;
      SkipSpace();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      while (true) {
        auto item = Value();
        if (item.kind == ConfigValue::Kind::kArray) Fail("nested arrays are not supported");
        arr.items.push_back(std::move(item));
        SkipSpace();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          SkipSpace();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return arr;
          }
          continue;
        }
        Expect(']');
        return arr;
      }
    }
    std::size_t const start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '\r') {
      ++pos_;
    }
    std::string token(s_.substr(start, pos_ - start));
    if (token == "true") return ConfigValue::Bool(true);
    if (token == "false") return ConfigValue::Bool(false);
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    bool const is_float = digits.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      char const* first = digits.data();
      if (!digits.empty() && digits[0] == '+') ++first;
      auto [p, ec] = std::from_chars(first, digits.data() + digits.size(), v);
      if (ec == std::errc() && p == digits.data() + digits.size() && !digits.empty()) {
        return ConfigValue::Integer(v);
      }
    } else {
      std::istringstream in(digits);
      in.imbue(std::locale::classic());
      double d = 0.0;
      if (in >> d && in.peek() == std::char_traits<char>::eof()) return ConfigValue::Float(d);
    }
    Fail("cannot parse value '" + token + "'");
  }

  std::string QuotedString() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) Fail("unterminated escape");
        char const e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: Fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) Fail("unterminated string");
    ++pos_;
    return out;
  }

 private:
  std::string_view s_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

ConfigDocument ConfigDocument::Parse(std::string_view text, std::string_view source) {
  ConfigDocument doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view const line = text.substr(start, end - start);
    ++line_no;
    LineParser p(line, std::string(source) + ":" + std::to_string(line_no));
    if (!p.AtCommentOrEnd()) {
      std::size_t const first = line.find_first_not_of(" \t");
      if (line[first] == '[') {
        p.Expect('[');
        section = p.Key();
        p.Expect(']');
      } else {
        std::string const key = p.Key();
        p.Expect('=');
        auto value = p.Value();
        std::string const full = section.empty() ? key : section + "." + key;
        if (doc.values_.count(full)) p.Fail("duplicate key '" + full + "'");
        doc.values_[full] = std::move(value);
      }
      if (!p.AtCommentOrEnd()) p.Fail("trailing characters");
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return doc;
}

ConfigDocument ConfigDocument::Load(std::filesystem::path const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path.string());
}

bool ConfigDocument::Has(std::string_view key) const { return values_.find(key) != values_.end(); }

ConfigValue const* ConfigDocument::Find(std::string_view key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void ConfigDocument::Set(std::string const& key, ConfigValue value) {
  values_[key] = std::move(value);
}

namespace {

[[noreturn]] void TypeError(std::string_view key, std::string_view want) {
  throw ConfigError("config key '" + std::string(key) + "' must be " + std::string(want));
}

}  // namespace

std::optional<std::string> ConfigDocument::GetString(std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind != ConfigValue::Kind::kString) TypeError(key, "a string");
  return v->text;
}

std::optional<std::int64_t> ConfigDocument::GetInteger(std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind != ConfigValue::Kind::kInteger) TypeError(key, "an integer");
  return v->integer;
}

std::optional<double> ConfigDocument::GetNumber(std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind != ConfigValue::Kind::kInteger && v->kind != ConfigValue::Kind::kFloat) {
    TypeError(key, "a number");
  }
  return v->number;
}

std::optional<bool> ConfigDocument::GetBool(std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind != ConfigValue::Kind::kBool) TypeError(key, "a boolean");
  return v->boolean;
}

std::optional<std::vector<std::int64_t>> ConfigDocument::GetIntegerList(
    std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind == ConfigValue::Kind::kInteger) return std::vector<std::int64_t>{v->integer};
  if (v->kind != ConfigValue::Kind::kArray) TypeError(key, "an array of integers");
  std::vector<std::int64_t> out;
  for (auto const& item : v->items) {
    if (item.kind != ConfigValue::Kind::kInteger) TypeError(key, "an array of integers");
    out.push_back(item.integer);
  }
  return out;
}

std::optional<std::vector<double>> ConfigDocument::GetNumberList(std::string_view key) const {
  auto const* v = Find(key);
  if (!v) return std::nullopt;
  if (v->kind != ConfigValue::Kind::kArray) TypeError(key, "an array of numbers");
  std::vector<double> out;
  for (auto const& item : v->items) {
    if (item.kind != ConfigValue::Kind::kInteger && item.kind != ConfigValue::Kind::kFloat) {
      TypeError(key, "an array of numbers");
    }
    out.push_back(item.number);
  }
  return out;
}

}  // namespace critiquerec
