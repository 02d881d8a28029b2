// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tracebayes/text.hpp"

namespace tracebayes {
namespace {

// Function words plus the handful of Java/C keywords that carry no domain
// signal. Sorted for binary search.
constexpr std::array kStopWords = std::to_array<std::string_view>({
    "a",       "about",   "above",   "after",   "again",    "against", "all",
    "also",    "am",      "an",      "and",     "any",      "are",     "as",
    "at",      "be",      "because", "been",    "before",   "being",   "below",
    "between", "both",    "but",     "by",      "can",      "cannot",  "could",
    "did",     "do",      "does",    "doing",   "down",     "during",  "each",
    "either",  "else",    "etc",     "even",    "ever",     "every",   "few",
    "for",     "from",    "further", "had",     "has",      "have",    "having",
    "he",      "her",     "here",    "hers",    "herself",  "him",     "himself",
    "his",     "how",     "however", "i",       "if",       "in",      "into",
    "is",      "it",      "its",     "itself",  "just",     "may",     "me",
    "might",   "more",    "most",    "must",    "my",       "myself",  "neither",
    "no",      "nor",     "not",     "of",      "off",      "on",      "once",
    "only",    "or",      "other",   "otherwise", "ought",  "our",     "ours",
    "ourselves", "out",   "over",    "own",     "per",      "same",    "shall",
    "she",     "should",  "so",      "some",    "such",     "than",    "that",
    "the",     "their",   "theirs",  "them",    "themselves", "then",  "there",
    "these",   "they",    "this",    "those",   "through",  "thus",    "to",
    "too",     "under",   "until",   "up",      "upon",     "us",      "very",
    "via",     "was",     "we",      "were",    "what",     "when",    "where",
    "whether", "which",   "while",   "who",     "whom",     "whose",   "why",
    "will",    "with",    "within",  "without", "would",    "yet",     "you",
    "your",    "yours",   "yourself", "yourselves",
});

static_assert(std::is_sorted(kStopWords.begin(), kStopWords.end()));

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

// Splits on every non-alphabetic byte and on case boundaries:
// "getUserName" -> get User Name, "HTTPServer" -> HTTP Server.
std::vector<std::string> split_words(std::string_view raw) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (!is_alpha(c)) {
      flush();
      continue;
    }
    if (is_upper(c) && !current.empty()) {
      const char prev = raw[i - 1];
      const bool next_lower = i + 1 < raw.size() && is_lower(raw[i + 1]);
      if (is_lower(prev) || (is_upper(prev) && next_lower)) flush();
    }
    current.push_back(to_lower(c));
  }
  flush();
  return words;
}

std::string stem_to_fixed_point(std::string word) {
  for (;;) {
    std::string next = porter_stem(word);
    if (next == word) return word;
    word = std::move(next);
  }
}

}  // namespace

bool is_stop_word(std::string_view word) {
  return std::binary_search(kStopWords.begin(), kStopWords.end(), word);
}

std::vector<std::string> preprocess_text(std::string_view raw) {
  std::vector<std::string> tokens;
  for (auto& word : split_words(raw)) {
    if (is_stop_word(word)) continue;
    std::string stem = stem_to_fixed_point(std::move(word));
    if (stem.size() < 2 || is_stop_word(stem)) continue;
    tokens.push_back(std::move(stem));
  }
  return tokens;
}

}  // namespace tracebayes
