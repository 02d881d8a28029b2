// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <string>
#include <string_view>

#include "tracebayes/text.hpp"

namespace tracebayes {
namespace {

// Porter (1980) with the departures of the reference C implementation
// (bli->ble, logi->log). Indices follow that implementation: b[0..k] is the
// current word, b[0..j] the stem under test.
class PorterStemmer {
 public:
  explicit PorterStemmer(std::string_view word) : b_(word), k_(static_cast<int>(word.size()) - 1) {}

  std::string run() {
    if (k_ <= 1) return b_;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<std::size_t>(k_) + 1);
  }

 private:
  bool cons(int i) const {
    switch (b_[i]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b[0..j].
  int m() const {
    int n = 0;
    int i = 0;
    for (;;) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    for (;;) {
      for (;;) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      for (;;) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_consonant(int j) const {
    if (j < 1) return false;
    if (b_[j] != b_[j - 1]) return false;
    return cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[i];
    return !(ch == 'w' || ch == 'x' || ch == 'y');
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (s.back() != b_[k_]) return false;
    if (len > k_ + 1) return false;
    if (std::string_view(b_).substr(static_cast<std::size_t>(k_ - len + 1), s.size()) != s) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1), std::string::npos, s);
    k_ = j_ + static_cast<int>(s.size());
  }

  void replace_if_measured(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (b_[k_] == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (b_[k_ - 1] != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_consonant(k_)) {
        --k_;
        const char ch = b_[k_];
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (j_ = k_, m() == 1 && cvc(k_)) {
        set_to("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
  }

  // Each candidate suffix that matches ends the step, whether or not the
  // measure condition allows the replacement.
  bool try_suffix(std::string_view suffix, std::string_view replacement) {
    if (!ends(suffix)) return false;
    replace_if_measured(replacement);
    return true;
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[k_ - 1]) {
      case 'a':
        if (try_suffix("ational", "ate")) return;
        if (try_suffix("tional", "tion")) return;
        return;
      case 'c':
        if (try_suffix("enci", "ence")) return;
        if (try_suffix("anci", "ance")) return;
        return;
      case 'e':
        try_suffix("izer", "ize");
        return;
      case 'l':
        if (try_suffix("bli", "ble")) return;
        if (try_suffix("alli", "al")) return;
        if (try_suffix("entli", "ent")) return;
        if (try_suffix("eli", "e")) return;
        if (try_suffix("ousli", "ous")) return;
        return;
      case 'o':
        if (try_suffix("ization", "ize")) return;
        if (try_suffix("ation", "ate")) return;
        if (try_suffix("ator", "ate")) return;
        return;
      case 's':
        if (try_suffix("alism", "al")) return;
        if (try_suffix("iveness", "ive")) return;
        if (try_suffix("fulness", "ful")) return;
        if (try_suffix("ousness", "ous")) return;
        return;
      case 't':
        if (try_suffix("aliti", "al")) return;
        if (try_suffix("iviti", "ive")) return;
        if (try_suffix("biliti", "ble")) return;
        return;
      case 'g':
        try_suffix("logi", "log");
        return;
      default:
        return;
    }
  }

  void step3() {
    switch (b_[k_]) {
      case 'e':
        if (try_suffix("icate", "ic")) return;
        if (try_suffix("ative", "")) return;
        if (try_suffix("alize", "al")) return;
        return;
      case 'i':
        try_suffix("iciti", "ic");
        return;
      case 'l':
        if (try_suffix("ical", "ic")) return;
        if (try_suffix("ful", "")) return;
        return;
      case 's':
        try_suffix("ness", "");
        return;
      default:
        return;
    }
  }

  void step4() {
    if (k_ < 1) return;
    bool matched = false;
    switch (b_[k_ - 1]) {
      case 'a':
        matched = ends("al");
        break;
      case 'c':
        matched = ends("ance") || ends("ence");
        break;
      case 'e':
        matched = ends("er");
        break;
      case 'i':
        matched = ends("ic");
        break;
      case 'l':
        matched = ends("able") || ends("ible");
        break;
      case 'n':
        matched = ends("ant") || ends("ement") || ends("ment") || ends("ent");
        break;
      case 'o':
        if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) {
          matched = true;
        } else {
          matched = ends("ou");
        }
        break;
      case 's':
        matched = ends("ism");
        break;
      case 't':
        matched = ends("ate") || ends("iti");
        break;
      case 'u':
        matched = ends("ous");
        break;
      case 'v':
        matched = ends("ive");
        break;
      case 'z':
        matched = ends("ize");
        break;
      default:
        break;
    }
    if (matched && m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[k_] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[k_] == 'l' && double_consonant(k_)) {
      j_ = k_;
      if (m() > 1) --k_;
    }
  }

  std::string b_;
  int k_;
  int j_ = 0;
};

bool is_lower_alpha(std::string_view word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  if (word.empty() || !is_lower_alpha(word)) return std::string(word);
  return PorterStemmer(word).run();
}

}  // namespace tracebayes
