#include "fiova/lexical.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>

#include "fiova/porter_stemmer.h"

namespace fiova::lexical {
namespace {

constexpr int kMaxOrder = 4;

// Decodes one UTF-8 code point starting at text[pos]; advances pos.
char32_t decode_utf8(std::string_view text, std::size_t& pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    throw LexicalError("invalid UTF-8 lead byte at offset " +
                       std::to_string(pos));
  }
  if (pos + extra >= text.size()) {
    throw LexicalError("truncated UTF-8 sequence at offset " +
                       std::to_string(pos));
  }
  for (int k = 1; k <= extra; ++k) {
    const unsigned char b = byte(pos + k);
    if ((b & 0xC0) != 0x80) {
      throw LexicalError("invalid UTF-8 continuation at offset " +
                         std::to_string(pos + k));
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000 ||
         c == 0xFEFF;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  if (c >= 0xA1 && c <= 0xBF) {
    return c != 0xAA && c != 0xB2 && c != 0xB3 && c != 0xB5 && c != 0xB9 &&
           c != 0xBA && !(c >= 0xBC && c <= 0xBE);
  }
  return c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x2E00 && c <= 0x2E7F) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
         (c >= 0x3014 && c <= 0x301F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
         (c >= 0xFF5B && c <= 0xFF65);
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  // Latin-1 capitals, excluding the multiplication sign.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  return c;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = decode_utf8(text, pos);
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      std::string p;
      encode_utf8(cp, p);
      tokens.push_back(std::move(p));
    } else {
      encode_utf8(to_lower(cp), current);
    }
  }
  flush();
  return tokens;
}

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int order) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(order)) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < order; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

int clipped_matches(const NgramCounts& cand, const NgramCounts& ref) {
  int matched = 0;
  for (const auto& [gram, count] : cand) {
    if (auto it = ref.find(gram); it != ref.end()) {
      matched += std::min(count, it->second);
    }
  }
  return matched;
}

int ngram_total(std::size_t length, int order) {
  return length >= static_cast<std::size_t>(order)
             ? static_cast<int>(length) - order + 1
             : 0;
}

void require_nonempty(const TokenSeq& candidate, const TokenSeq& reference,
                      std::string_view metric) {
  if (candidate.empty() || reference.empty()) {
    throw LexicalError(std::string(metric) + ": empty token sequence");
  }
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  if (text.empty()) throw LexicalError("tokenize: empty input");
  TokenSeq seq{split_tokens(text)};
  if (seq.empty()) throw LexicalError("tokenize: input has no tokens");
  return seq;
}

std::string join(const TokenSeq& seq) {
  std::string out;
  for (const auto& t : seq.tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  std::size_t pos = 0;
  const char32_t cp = decode_utf8(token, pos);
  return pos == token.size() && is_punct(cp);
}

std::vector<std::string> words(const TokenSeq& seq) {
  std::vector<std::string> out;
  for (const auto& t : seq.tokens) {
    if (!is_punctuation_token(t)) out.push_back(t);
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  return words(TokenSeq{split_tokens(text)}).size();
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference) {
  require_nonempty(candidate, reference, "bleu");
  double log_sum = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const int matched =
        clipped_matches(count_ngrams(candidate.tokens, n),
                        count_ngrams(reference.tokens, n));
    const int total = ngram_total(candidate.size(), n);
    if (n == 1) {
      if (matched == 0) return 0.0;
      log_sum += std::log(static_cast<double>(matched) / total);
    } else {
      log_sum += std::log((matched + 1.0) / (total + 1.0));
    }
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / kMaxOrder);
}

double gleu(const TokenSeq& candidate, const TokenSeq& reference) {
  require_nonempty(candidate, reference, "gleu");
  int matched = 0;
  int cand_total = 0;
  int ref_total = 0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    matched += clipped_matches(count_ngrams(candidate.tokens, n),
                               count_ngrams(reference.tokens, n));
    cand_total += ngram_total(candidate.size(), n);
    ref_total += ngram_total(reference.size(), n);
  }
  const double precision = static_cast<double>(matched) / cand_total;
  const double recall = static_cast<double>(matched) / ref_total;
  return std::min(precision, recall);
}

MeteorAlignment meteor_align(const TokenSeq& candidate,
                             const TokenSeq& reference) {
  const std::size_t c = candidate.size();
  const std::size_t r = reference.size();
  std::vector<std::optional<std::size_t>> cand_to_ref(c);
  std::vector<bool> ref_used(r, false);

  std::vector<std::string> cand_stems(c);
  std::vector<std::string> ref_stems(r);
  for (std::size_t i = 0; i < c; ++i) {
    cand_stems[i] = porter_stem(candidate.tokens[i]);
  }
  for (std::size_t j = 0; j < r; ++j) {
    ref_stems[j] = porter_stem(reference.tokens[j]);
  }

  // Repeatedly aligns the longest run of consecutive matches among unaligned
  // positions (ties: leftmost candidate, then leftmost reference).
  const auto run_stage = [&](auto&& matches) {
    for (;;) {
      std::size_t best_len = 0, best_i = 0, best_j = 0;
      for (std::size_t i = 0; i < c; ++i) {
        if (cand_to_ref[i]) continue;
        for (std::size_t j = 0; j < r; ++j) {
          std::size_t run = 0;
          while (i + run < c && j + run < r && !cand_to_ref[i + run] &&
                 !ref_used[j + run] && matches(i + run, j + run)) {
            ++run;
          }
          if (run > best_len) {
            best_len = run;
            best_i = i;
            best_j = j;
          }
        }
      }
      if (best_len == 0) return;
      for (std::size_t k = 0; k < best_len; ++k) {
        cand_to_ref[best_i + k] = best_j + k;
        ref_used[best_j + k] = true;
      }
    }
  };

  run_stage([&](std::size_t i, std::size_t j) {
    return candidate.tokens[i] == reference.tokens[j];
  });
  run_stage(
      [&](std::size_t i, std::size_t j) { return cand_stems[i] == ref_stems[j]; });

  MeteorAlignment alignment;
  for (std::size_t i = 0; i < c; ++i) {
    if (cand_to_ref[i]) alignment.pairs.emplace_back(i, *cand_to_ref[i]);
  }
  alignment.matches = alignment.pairs.size();
  for (std::size_t k = 0; k < alignment.pairs.size(); ++k) {
    const bool adjacent =
        k > 0 && alignment.pairs[k].first == alignment.pairs[k - 1].first + 1 &&
        alignment.pairs[k].second == alignment.pairs[k - 1].second + 1;
    if (!adjacent) ++alignment.chunks;
  }
  return alignment;
}

double meteor(const TokenSeq& candidate, const TokenSeq& reference,
              const MeteorParams& params) {
  require_nonempty(candidate, reference, "meteor");
  const MeteorAlignment alignment = meteor_align(candidate, reference);
  if (alignment.matches == 0) return 0.0;
  const double m = static_cast<double>(alignment.matches);
  const double precision = m / candidate.size();
  const double recall = m / reference.size();
  const double fmean = precision * recall /
                       (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double fragmentation = static_cast<double>(alignment.chunks) / m;
  const double penalty = params.gamma * std::pow(fragmentation, params.beta);
  return fmean * (1.0 - penalty);
}

LexicalScores score_all(const TokenSeq& candidate, const TokenSeq& reference) {
  return {bleu(candidate, reference), gleu(candidate, reference),
          meteor(candidate, reference)};
}

double token_f1(const std::vector<std::string>& a,
                const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : a) ++counts[t];
  int overlap = 0;
  for (const auto& t : b) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / b.size();
  const double recall = static_cast<double>(overlap) / a.size();
  return 2.0 * precision * recall / (precision + recall);
}

double token_f1(std::string_view a, std::string_view b) {
  return token_f1(words(TokenSeq{split_tokens(a)}),
                  words(TokenSeq{split_tokens(b)}));
}

}  // namespace fiova::lexical
