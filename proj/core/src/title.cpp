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

#include "critiquerec/title.hpp"

#include <algorithm>
#include <cctype>

namespace critiquerec {
namespace {

bool IsSpace(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

// Bytes >= 0x80 belong to UTF-8 sequences and are treated as letters.
bool IsWordByte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && IsSpace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

NormalizedTitle NormalizeTitle(std::string_view raw) {
  NormalizedTitle out;
  std::string_view s = Trim(raw);

  // Trailing "(YYYY)".
  if (s.size() >= 6 && s.back() == ')' && s[s.size() - 6] == '(') {
    std::string_view digits = s.substr(s.size() - 5, 4);
    if (std::all_of(digits.begin(), digits.end(),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      out.year = std::stoi(std::string(digits));
      s = Trim(s.substr(0, s.size() - 6));
    }
  }

  std::string& canon = out.canonical;
  canon.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto const c = static_cast<unsigned char>(s[i]);
    bool keep = IsWordByte(c);
    if (c == '\'' && i > 0 && i + 1 < s.size() &&
        IsWordByte(static_cast<unsigned char>(s[i - 1])) &&
        IsWordByte(static_cast<unsigned char>(s[i + 1]))) {
      keep = true;
    }
    if (!keep) {
      pending_space = !canon.empty();
      continue;
    }
    if (pending_space) {
      canon.push_back(' ');
      pending_space = false;
    }
    canon.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  return out;
}

std::vector<std::string> Trigrams(std::string_view canonical) {
  std::vector<std::string> grams;
  std::size_t pos = 0;
  while (pos < canonical.size()) {
    std::size_t end = canonical.find(' ', pos);
    if (end == std::string_view::npos) end = canonical.size();
    if (end > pos) {
      std::string padded = "  ";
      padded.append(canonical.substr(pos, end - pos));
      padded.push_back(' ');
      for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        grams.push_back(padded.substr(i, 3));
      }
    }
    pos = end + 1;
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

double TrigramSimilarity(std::vector<std::string> const& a,
                         std::vector<std::string> const& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return 2.0 * static_cast<double>(shared) / static_cast<double>(a.size() + b.size());
}

double TrigramSimilarity(std::string_view canonical_a, std::string_view canonical_b) {
  return TrigramSimilarity(Trigrams(canonical_a), Trigrams(canonical_b));
}

}  // namespace critiquerec
