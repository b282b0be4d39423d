#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xplore::text {

struct Token {
  std::string surface;
  std::string normalized;  // lowercase
  std::string stem;
  bool stopword = false;
  bool numeric = false;
};

using TokenStream = std::vector<Token>;

// Suffix rules tried in order; the first rule whose suffix matches and whose
// result keeps at least three characters is applied, and no other.
std::string stem(std::string_view lowercase_word);

std::string to_lower(std::string_view s);

// Splits on whitespace and punctuation. Decimal numbers ("12.5") stay whole;
// underscores are word characters so column names survive as one token.
std::vector<std::string> split_words(std::string_view s);

TokenStream tokenize(std::string_view question, const std::set<std::string>& stopwords);

// Vocabulary normalization: stems of all words joined by single spaces.
std::string normalize_term(std::string_view term);

const std::set<std::string>& default_stopwords();

}  // namespace xplore::text
