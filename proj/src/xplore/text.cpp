#include "xplore/text.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace xplore::text {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kSuffixRules{{
    {"ies", "y"},
    {"es", ""},
    {"s", ""},
    {"ing", ""},
    {"ed", ""},
}};

constexpr std::size_t kMinStem = 3;

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

}  // namespace

std::string stem(std::string_view w) {
  for (const auto& [suffix, repl] : kSuffixRules) {
    if (w.size() < suffix.size() || w.substr(w.size() - suffix.size()) != suffix) continue;
    std::string out(w.substr(0, w.size() - suffix.size()));
    out += repl;
    if (out.size() < kMinStem) continue;
    return out;
  }
  return std::string(w);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (!is_word_char(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (std::isdigit(c)) {
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      // digits glued to letters ("h2o") form one word
      while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
    } else {
      while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
    }
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

TokenStream tokenize(std::string_view question, const std::set<std::string>& stopwords) {
  TokenStream out;
  for (auto& word : split_words(question)) {
    Token t;
    t.surface = word;
    t.normalized = to_lower(word);
    bool all_digits = !t.normalized.empty();
    for (char c : t.normalized) {
      if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') all_digits = false;
    }
    t.numeric = all_digits;
    t.stem = t.numeric ? t.normalized : stem(t.normalized);
    t.stopword = stopwords.count(t.normalized) > 0 || stopwords.count(t.stem) > 0;
    out.push_back(std::move(t));
  }
  return out;
}

std::string normalize_term(std::string_view term) {
  std::string out;
  for (auto& word : split_words(term)) {
    if (!out.empty()) out += ' ';
    out += stem(to_lower(word));
  }
  return out;
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words{
      "a",     "about", "all",    "an",      "and",     "any",     "are",    "as",
      "at",    "be",    "by",     "each",    "every",   "find",    "for",    "from",
      "get",   "give",  "have",   "how",     "i",       "in",      "is",     "it",
      "its",   "list",  "me",     "of",      "on",      "or",      "per",    "please",
      "show",  "than",  "that",   "the",     "their",   "them",    "there",  "to",
      "what",  "which", "who",    "whose",   "with",    "display", "return", "many",
      "count", "number", "total", "sum",     "average", "avg",     "mean",   "minimum",
      "min",   "lowest", "smallest", "maximum", "max",  "highest", "largest", "over",
      "above", "greater", "more", "after",   "under",   "below",   "less",   "fewer",
      "before", "least", "most",  "exceeding", "want",  "see",     "do",     "does",
      "where", "we",    "you",    "my",      "this",    "these",   "those",  "into",
  };
  return words;
}

}  // namespace xplore::text
