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

#ifndef CRITIQUEREC_TESTS_PARSER_CORPUS_HPP_
#define CRITIQUEREC_TESTS_PARSER_CORPUS_HPP_

#include <string>
#include <vector>

namespace critiquerec::testing {

struct CorpusDocument {
  std::string name;
  std::string text;
  std::vector<std::string> expected;
};

inline std::vector<std::vector<std::string>> const& CorpusTitleSets() {
  static std::vector<std::vector<std::string>> const sets{
      {"Jurassic Park (1993)", "Gladiator (2000)", "Die Hard (1988)", "Blade (1998)",
       "Pulp Fiction (1994)", "The Dark Knight (2008)", "Heat (1995)", "Alien (1979)",
       "Fargo (1996)", "Se7en (1995)"},
      {"Schindler's List (1993)", "Monsters, Inc. (2001)", "2001: A Space Odyssey (1968)",
       "Star Wars: Episode IV - A New Hope (1977)", "12 Angry Men (1957)"},
      {"The Hobbit", "Pride and Prejudice", "Dune", "The Left Hand of Darkness",
       "One Hundred Years of Solitude", "Beloved", "Middlemarch"},
      {"Amélie (2001)", "Léon: The Professional (1994)", "Crouching Tiger, Hidden Dragon (2000)",
       "Spirited Away (2001)", "City of God (2002)", "Oldboy (2003)"},
      {"The Lord of the Rings: The Fellowship of the Ring (2001)", "WALL-E (2008)",
       "Back to the Future (1985)", "E.T. the Extra-Terrestrial (1982)",
       "Who Framed Roger Rabbit (1988)", "Ferris Bueller's Day Off (1986)",
       "The Princess Bride (1987)", "Groundhog Day (1993)"},
  };
  return sets;
}

/// Ten numbered-list styles seen in chat model output, applied to five title
/// sets: 50 documents.
inline std::vector<CorpusDocument> ParserCorpus() {
  struct Style {
    std::string name;
    std::string (*line)(std::size_t rank, std::string const& title);
    std::string preamble;
    std::string outro;
    std::string eol;
  };
  std::vector<Style> const styles{
      {"dot", [](std::size_t k, std::string const& t) { return std::to_string(k) + ". " + t; },
       "", "", "\n"},
      {"paren", [](std::size_t k, std::string const& t) { return std::to_string(k) + ") " + t; },
       "", "", "\n"},
      {"bare", [](std::size_t k, std::string const& t) { return std::to_string(k) + " " + t; },
       "", "", "\n"},
      {"dash", [](std::size_t k, std::string const& t) { return std::to_string(k) + " - " + t; },
       "", "", "\n"},
      {"bold", [](std::size_t k, std::string const& t) { return "**" + std::to_string(k) + ". " + t + "**"; },
       "Here are my picks:\n\n", "", "\n"},
      {"bullet",
       [](std::size_t k, std::string const& t) { return "- " + std::to_string(k) + ". " + t; },
       "Recommendations\n", "\nEnjoy!", "\n"},
      {"reason",
       [](std::size_t k, std::string const& t) {
         return std::to_string(k) + ". **" + t + "** - a strong match for this user";
       },
       "Based on the history, the user enjoys well-crafted stories.\n", "", "\n"},
      {"quoted",
       [](std::size_t k, std::string const& t) { return std::to_string(k) + ". \"" + t + "\""; },
       "", "\nLet me know if you want more.", "\n"},
      {"colon",
       [](std::size_t k, std::string const& t) {
         return std::to_string(k) + ". `" + t + "`: fits the user's taste";
       },
       "Sure! Ranked from most to least likely:\n", "\nThese should suit the user.", "\n"},
      {"crlf",
       [](std::size_t k, std::string const& t) {
         return "  " + std::to_string(k) + ".   " + t + " \xE2\x80\x94 recommended";
       },
       "", "", "\r\n\r\n"},
  };
  std::vector<CorpusDocument> docs;
  auto const& sets = CorpusTitleSets();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (auto const& style : styles) {
      CorpusDocument doc;
      doc.name = style.name + "/" + std::to_string(s);
      doc.text = style.preamble;
      for (std::size_t i = 0; i < sets[s].size(); ++i) {
        doc.text += style.line(i + 1, sets[s][i]) + style.eol;
      }
      doc.text += style.outro;
      doc.expected = sets[s];
      docs.push_back(std::move(doc));
    }
  }
  return docs;
}

}  // namespace critiquerec::testing

#endif  // CRITIQUEREC_TESTS_PARSER_CORPUS_HPP_
