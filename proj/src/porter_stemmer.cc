#include "fiova/porter_stemmer.h"

#include <algorithm>
#include <array>
#include <utility>

namespace fiova::lexical {
namespace {

bool is_consonant(const std::string& w, std::size_t i) {
  switch (w[i]) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return false;
    case 'y':
      return i == 0 ? true : !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// m in [C](VC)^m[V], evaluated on w[0, len).
int measure(const std::string& w, std::size_t len) {
  int m = 0;
  std::size_t i = 0;
  while (i < len && is_consonant(w, i)) ++i;
  while (i < len) {
    while (i < len && !is_consonant(w, i)) ++i;
    if (i >= len) break;
    while (i < len && is_consonant(w, i)) ++i;
    ++m;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    if (!is_consonant(w, i)) return true;
  }
  return false;
}

bool ends_double_consonant(const std::string& w, std::size_t len) {
  return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
}

// *o: stem ends consonant-vowel-consonant, final consonant not w, x or y.
bool ends_cvc(const std::string& w, std::size_t len) {
  if (len < 3) return false;
  if (!is_consonant(w, len - 1) || is_consonant(w, len - 2) ||
      !is_consonant(w, len - 3)) {
    return false;
  }
  const char c = w[len - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), w.rbegin());
}

using Rule = std::pair<std::string_view, std::string_view>;

// First rule whose suffix matches decides; it fires only if the remaining stem
// has measure > min_measure.
template <std::size_t N>
void apply_rules(std::string& w, const std::array<Rule, N>& rules,
                 int min_measure) {
  for (const auto& [suffix, replacement] : rules) {
    if (!ends_with(w, suffix)) continue;
    const std::size_t stem_len = w.size() - suffix.size();
    if (measure(w, stem_len) > min_measure) {
      w.resize(stem_len);
      w += replacement;
    }
    return;
  }
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    // unchanged
  } else if (ends_with(w, "s")) {
    w.pop_back();
  }
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  bool stripped = false;
  if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    stripped = true;
  } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    stripped = true;
  }
  if (!stripped) return;

  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w += 'e';
  } else if (ends_double_consonant(w, w.size())) {
    const char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
    w += 'e';
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

void step2(std::string& w) {
  static constexpr std::array<Rule, 20> kRules = {{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
      {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
      {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
      {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
      {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
      {"iviti", "ive"},   {"biliti", "ble"},
  }};
  apply_rules(w, kRules, 0);
}

void step3(std::string& w) {
  static constexpr std::array<Rule, 7> kRules = {{
      {"icate", "ic"},
      {"ative", ""},
      {"alize", "al"},
      {"iciti", "ic"},
      {"ical", "ic"},
      {"ful", ""},
      {"ness", ""},
  }};
  apply_rules(w, kRules, 0);
}

void step4(std::string& w) {
  static constexpr std::array<std::string_view, 19> kSuffixes = {
      "al",  "ance", "ence", "er",  "ic",  "able", "ible",
      "ant", "ement", "ment", "ent", "ion", "ou",   "ism",
      "ate", "iti",  "ous",  "ive", "ize",
  };
  // Longest matching suffix wins.
  std::string_view best;
  for (auto s : kSuffixes) {
    if (ends_with(w, s) && s.size() > best.size()) best = s;
  }
  if (best.empty()) return;
  const std::size_t stem_len = w.size() - best.size();
  if (measure(w, stem_len) <= 1) return;
  if (best == "ion") {
    if (stem_len == 0 || (w[stem_len - 1] != 's' && w[stem_len - 1] != 't')) {
      return;
    }
  }
  w.resize(stem_len);
}

void step5(std::string& w) {
  if (ends_with(w, "e")) {
    const std::size_t stem_len = w.size() - 1;
    const int m = measure(w, stem_len);
    if (m > 1 || (m == 1 && !ends_cvc(w, stem_len))) w.pop_back();
  }
  if (measure(w, w.size()) > 1 && ends_double_consonant(w, w.size()) &&
      w.back() == 'l') {
    w.pop_back();
  }
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 2) return w;
  if (!std::all_of(w.begin(), w.end(),
                   [](char c) { return c >= 'a' && c <= 'z'; })) {
    return w;
  }
  step1a(w);
  step1b(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5(w);
  return w;
}

}  // namespace fiova::lexical
