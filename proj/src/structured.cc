#include "fiova/structured.h"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace fiova::llm {
namespace {

using nlohmann::json;

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string normalize_quotes(std::string_view raw) {
  std::string s(raw);
  for (std::string_view q : {"“", "”", "„", "‟", "″"}) s = replace_all(s, q, "\"");
  return s;
}

// Index one past the structure opened at `open`, or npos if unbalanced.
std::size_t balanced_end(const std::string& s, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      // An apostrophe between letters is a contraction, not a string.
      if (c == '\'' && i > 0 && i + 1 < s.size() &&
          std::isalpha(static_cast<unsigned char>(s[i - 1])) &&
          std::isalpha(static_cast<unsigned char>(s[i + 1]))) {
        continue;
      }
      quote = c;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string::npos;
}

bool is_ident(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Rewrites Python literal syntax into JSON.
void append_string_char(std::string& out, char c) {
  switch (c) {
    case '\n': out += "\\n"; break;
    case '\r': out += "\\r"; break;
    case '\t': out += "\\t"; break;
    default: out += c;
  }
}

std::string pythonish_to_json(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') {
      out += c;
      for (++i; i < s.size(); ++i) {
        append_string_char(out, s[i]);
        if (s[i] == '\\' && i + 1 < s.size()) {
          out += s[++i];
        } else if (s[i] == '"') {
          break;
        }
      }
    } else if (c == '\'') {
      out += '"';
      for (++i; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          if (s[i + 1] == '\'') {
            out += '\'';
          } else {
            out += s[i];
            out += s[i + 1];
          }
          ++i;
        } else if (s[i] == '\'') {
          // Contraction inside a single-quoted string.
          if (i + 1 < s.size() && std::isalpha(static_cast<unsigned char>(s[i + 1])) &&
              std::isalpha(static_cast<unsigned char>(s[i - 1]))) {
            out += '\'';
            continue;
          }
          break;
        } else if (s[i] == '"') {
          out += "\\\"";
        } else {
          append_string_char(out, s[i]);
        }
      }
      out += '"';
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
      out += c;
    } else if (std::isalpha(static_cast<unsigned char>(c)) &&
               (i == 0 || !is_ident(s[i - 1]))) {
      std::size_t j = i;
      while (j < s.size() && is_ident(s[j])) ++j;
      const auto word = s.substr(i, j - i);
      if (word == "True") {
        out += "true";
      } else if (word == "False") {
        out += "false";
      } else if (word == "None") {
        out += "null";
      } else {
        out += word;
      }
      i = j - 1;
    } else {
      out += c;
    }
  }
  return out;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
  }
  try {
    return json::parse(pythonish_to_json(text));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("no parsable structure: ") + e.what());
  }
}

std::string strip_fences(std::string s) {
  std::size_t pos;
  while ((pos = s.find("```")) != std::string::npos) {
    auto end = pos + 3;
    while (end < s.size() && std::isalpha(static_cast<unsigned char>(s[end]))) ++end;
    s.erase(pos, end - pos);
  }
  return s;
}

const json* find_key(const json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string k = normalize_whitespace(it.key());
    std::transform(k.begin(), k.end(), k.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (k == key) return &it.value();
  }
  return nullptr;
}

std::string string_item(const json& v, std::string_view what) {
  if (!v.is_string()) {
    throw ParseError(std::string(what) + " entries must be strings");
  }
  return v.get<std::string>();
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string_view to_string(Relationship r) {
  switch (r) {
    case Relationship::kEntailment: return "entailment";
    case Relationship::kNeutral: return "neutral";
    case Relationship::kContradiction: return "contradiction";
  }
  return "unknown";
}

Relationship relationship_from_string(std::string_view label) {
  std::string s = normalize_whitespace(label);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "entailment") return Relationship::kEntailment;
  if (s == "neutral") return Relationship::kNeutral;
  if (s == "contradiction") return Relationship::kContradiction;
  throw ParseError("unknown relationship label \"" + std::string(label) + "\"");
}

json extract_structure(std::string_view raw) {
  const std::string s = strip_fences(normalize_quotes(raw));
  std::size_t pos = s.find_first_of("{[");
  if (pos == std::string::npos) throw ParseError("no parsable structure");
  std::vector<std::string> values;
  while (pos != std::string::npos && pos < s.size()) {
    const auto end = balanced_end(s, pos);
    if (end == std::string::npos) break;
    values.push_back(s.substr(pos, end - pos));
    std::size_t next = end;
    while (next < s.size() &&
           (std::isspace(static_cast<unsigned char>(s[next])) || s[next] == ',')) {
      ++next;
    }
    if (next < s.size() && s[next] == '{' && s[pos] == '{') {
      pos = next;
    } else {
      break;
    }
  }
  if (values.empty()) throw ParseError("no parsable structure: unbalanced brackets");
  if (values.size() == 1) return parse_value(values.front());
  json arr = json::array();
  for (const auto& v : values) arr.push_back(parse_value(v));
  return arr;
}

int parse_score(std::string_view raw) {
  const json doc = extract_structure(raw);
  const json* v = find_key(doc, "score");
  if (!v) throw ParseError("missing \"score\"");
  json value = *v;
  if (value.is_array()) {
    if (value.size() != 1) throw ParseError("score list must hold one value");
    value = value.front();
  }
  double number;
  if (value.is_number()) {
    number = value.get<double>();
  } else if (value.is_string()) {
    const std::string text = normalize_whitespace(value.get<std::string>());
    std::size_t used = 0;
    try {
      number = std::stod(text, &used);
    } catch (const std::exception&) {
      throw ParseError("score is not a number: \"" + text + "\"");
    }
    if (used != text.size()) throw ParseError("score is not a number: \"" + text + "\"");
  } else {
    throw ParseError("score is not a number");
  }
  if (number != std::floor(number)) throw ParseError("score is not an integer");
  if (number < 1 || number > 10) {
    throw ParseError("score out of range 1..10: " + std::to_string(number));
  }
  return static_cast<int>(number);
}

std::string parse_groundtruth(std::string_view raw) {
  const json doc = extract_structure(raw);
  const json* v = find_key(doc, "gt");
  if (!v) throw ParseError("missing \"gt\"");
  std::string text;
  if (v->is_string()) {
    text = v->get<std::string>();
  } else if (v->is_array()) {
    for (const auto& item : *v) {
      if (!text.empty()) text += ' ';
      text += string_item(item, "gt");
    }
  } else {
    throw ParseError("\"gt\" must be a string or a list of strings");
  }
  text = normalize_whitespace(text);
  if (text.empty()) throw ParseError("empty groundtruth");
  return text;
}

std::vector<std::string> parse_events(std::string_view raw) {
  const json doc = extract_structure(raw);
  const json* list = doc.is_array() ? &doc : find_key(doc, "events");
  if (!list) throw ParseError("missing \"events\"");
  if (!list->is_array()) throw ParseError("\"events\" must be a list");
  std::vector<std::string> events;
  for (const auto& item : *list) {
    auto e = normalize_whitespace(string_item(item, "events"));
    if (e.empty()) throw ParseError("empty event");
    events.push_back(std::move(e));
  }
  if (events.empty()) throw ParseError("no events");
  if (events.size() > kMaxEvents) {
    throw ParseError("more than 10 events: " + std::to_string(events.size()));
  }
  return events;
}

std::vector<Verdict> parse_verdicts(std::string_view raw) {
  json doc = extract_structure(raw);
  if (doc.is_object()) {
    if (find_key(doc, "relationship")) {
      doc = json::array({doc});
    } else if (doc.size() == 1 && doc.begin()->is_array()) {
      doc = json(*doc.begin());
    }
  }
  if (!doc.is_array()) throw ParseError("verdicts must be a list");
  std::vector<Verdict> out;
  for (const auto& item : doc) {
    const json* rel = find_key(item, "relationship");
    if (!rel || !rel->is_string()) throw ParseError("verdict without relationship");
    const json* ev = find_key(item, "event");
    std::string event;
    if (ev) event = normalize_whitespace(string_item(*ev, "event"));
    out.push_back({std::move(event), relationship_from_string(rel->get<std::string>())});
  }
  if (out.empty()) throw ParseError("no verdicts");
  return out;
}

StructuredValue parse_structured(OutputKind kind, std::string_view raw) {
  if (normalize_whitespace(raw).empty()) throw ParseError("empty completion");
  switch (kind) {
    case OutputKind::kScore: return parse_score(raw);
    case OutputKind::kGroundtruth: return parse_groundtruth(raw);
    case OutputKind::kEvents: return parse_events(raw);
    case OutputKind::kVerdicts: return parse_verdicts(raw);
  }
  throw ParseError("unknown output kind");
}

}  // namespace fiova::llm
