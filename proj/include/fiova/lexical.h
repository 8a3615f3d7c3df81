// Lexical layer: tokenization and the BLEU / GLEU / METEOR sentence metrics.
//
// All functions here are pure and reentrant.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fiova::lexical {

class LexicalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ordered lowercase tokens. No token is empty or contains whitespace.
struct TokenSeq {
  std::vector<std::string> tokens;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  bool operator==(const TokenSeq&) const = default;
};

struct LexicalScores {
  double bleu = 0.0;
  double gleu = 0.0;
  double meteor = 0.0;
};

// Reported alongside METEOR values: synonym and paraphrase modules are absent.
inline constexpr std::string_view kMeteorVariant = "meteor-exact+stem";

// Splits on Unicode whitespace, lowercases ASCII letters and emits every
// punctuation character as its own token. Throws LexicalError on empty or
// invalid UTF-8 input.
TokenSeq tokenize(std::string_view text);

// Joins tokens with single spaces. tokenize(join(tokenize(x))) == tokenize(x).
std::string join(const TokenSeq& seq);

// True when the token is a single punctuation code point.
bool is_punctuation_token(std::string_view token);

// Tokens that are not punctuation.
std::vector<std::string> words(const TokenSeq& seq);

// Number of non-punctuation tokens.
std::size_t word_count(std::string_view text);

// Sentence BLEU, orders 1..4, add-one smoothing on orders 2..4 and the usual
// brevity penalty.
double bleu(const TokenSeq& candidate, const TokenSeq& reference);

// Sentence GLEU: min(precision, recall) over n-grams of orders 1..4 pooled.
double gleu(const TokenSeq& candidate, const TokenSeq& reference);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  // (candidate index, reference index), sorted by candidate index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// Exact-match stage followed by a Porter-stem stage over what is left.
MeteorAlignment meteor_align(const TokenSeq& candidate,
                             const TokenSeq& reference);

double meteor(const TokenSeq& candidate, const TokenSeq& reference,
              const MeteorParams& params = {});

LexicalScores score_all(const TokenSeq& candidate, const TokenSeq& reference);

// Multiset token F1 over the non-punctuation tokens of two texts. Returns 0
// when either side has no words.
double token_f1(std::string_view a, std::string_view b);
double token_f1(const std::vector<std::string>& a,
                const std::vector<std::string>& b);

}  // namespace fiova::lexical
