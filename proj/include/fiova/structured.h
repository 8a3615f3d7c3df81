// Lenient parsing of the structured replies the prompts ask for.
//
// Accepts strict JSON and the Python-dict flavour the prompts request (single
// quotes, True/False/None, trailing commas), curly quotes, code fences and
// surrounding prose. A run of bare objects separated by commas is read as a
// list, which is how verdict replies often arrive.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace fiova::llm {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxEvents = 10;

enum class Relationship { kEntailment, kNeutral, kContradiction };

std::string_view to_string(Relationship r);
Relationship relationship_from_string(std::string_view label);  // ParseError

struct Verdict {
  std::string event;
  Relationship relationship;

  bool operator==(const Verdict&) const = default;
};

enum class OutputKind { kScore, kGroundtruth, kEvents, kVerdicts };

using StructuredValue =
    std::variant<int, std::string, std::vector<std::string>, std::vector<Verdict>>;

// Extracts the first JSON-like structure from `raw`.
nlohmann::json extract_structure(std::string_view raw);

int parse_score(std::string_view raw);
std::string parse_groundtruth(std::string_view raw);
std::vector<std::string> parse_events(std::string_view raw);
std::vector<Verdict> parse_verdicts(std::string_view raw);

StructuredValue parse_structured(OutputKind kind, std::string_view raw);

// Trims and collapses internal whitespace runs to one space.
std::string normalize_whitespace(std::string_view text);

}  // namespace fiova::llm
