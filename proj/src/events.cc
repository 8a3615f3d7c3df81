#include "fiova/events.h"

#include <algorithm>
#include <future>
#include <numeric>
#include <regex>

#include "fiova/lexical.h"

namespace fiova::events {

std::string_view to_string(EventSource s) {
  return s == EventSource::kGroundtruth ? "groundtruth" : "response";
}

void EventSet::validate() const {
  if (events.empty()) throw EventError("event set is empty");
  if (events.size() > llm::kMaxEvents) {
    throw EventError("event set has " + std::to_string(events.size()) +
                     " events, at most 10 allowed");
  }
  for (const auto& e : events) {
    if (e.empty()) throw EventError("empty event");
  }
}

EventSet make_event_set(std::vector<std::string> events, EventSource source) {
  for (auto& e : events) e = llm::normalize_whitespace(e);
  EventSet set{std::move(events), source};
  set.validate();
  return set;
}

void WeightedEventSet::validate() const {
  events.validate();
  if (weights.size() != events.size()) throw EventError("weights misaligned with events");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw EventError("weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw EventError("weights do not sum to one");
}

WeightedEventSet weights_from_supports(const EventSet& gt_events,
                                       std::vector<int> supports) {
  gt_events.validate();
  if (supports.size() != gt_events.size()) {
    throw EventError("supports misaligned with events");
  }
  double total = 0.0;
  std::vector<double> raw;
  for (int s : supports) {
    if (s < 0) throw EventError("negative support");
    raw.push_back(std::max(s, 1));
    total += raw.back();
  }
  for (auto& w : raw) w /= total;
  return {gt_events, std::move(raw), std::move(supports)};
}

WeightedEventSet uniform_weights(const EventSet& gt_events) {
  return weights_from_supports(gt_events, std::vector<int>(gt_events.size(), 1));
}

VerdictList align_verdicts(const EventSet& queried, std::vector<Verdict> parsed) {
  if (parsed.size() != queried.size()) {
    throw EventError("cross-check returned " + std::to_string(parsed.size()) +
                     " verdicts for " + std::to_string(queried.size()) + " events");
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) parsed[i].event = queried.events[i];
  return parsed;
}

std::size_t count_relationship(const VerdictList& verdicts, Relationship r) {
  return static_cast<std::size_t>(std::count_if(
      verdicts.begin(), verdicts.end(),
      [r](const Verdict& v) { return v.relationship == r; }));
}

nlohmann::json to_json(const VerdictList& verdicts) {
  auto arr = nlohmann::json::array();
  for (const auto& v : verdicts) {
    arr.push_back({{"event", v.event}, {"relationship", llm::to_string(v.relationship)}});
  }
  return arr;
}

VerdictList verdicts_from_json(const nlohmann::json& doc) {
  VerdictList out;
  try {
    for (const auto& item : doc) {
      out.push_back({item.at("event").get<std::string>(),
                     llm::relationship_from_string(
                         item.at("relationship").get<std::string>())});
    }
  } catch (const std::exception& e) {
    throw EventError(std::string("bad verdict list: ") + e.what());
  }
  return out;
}

LlmEventBackend::LlmEventBackend(llm::Gateway& gateway, llm::Decoding decoding)
    : gateway_(gateway), decoding_(std::move(decoding)) {}

std::string LlmEventBackend::synthesize_groundtruth(
    std::span<const std::string> captions) {
  return llm::parse_groundtruth(
      gateway_.complete(llm::render_gt_synthesis(captions), decoding_));
}

EventSet LlmEventBackend::extract_events(std::string_view description,
                                         EventSource source) {
  return make_event_set(
      llm::parse_events(
          gateway_.complete(llm::render_event_extraction(description), decoding_)),
      source);
}

VerdictList LlmEventBackend::cross_check(std::string_view description,
                                         const EventSet& events) {
  events.validate();
  return align_verdicts(
      events, llm::parse_verdicts(gateway_.complete(
                  llm::render_cross_check(description, events.events), decoding_)));
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto s = llm::normalize_whitespace(current);
    current.clear();
    if (s.empty()) return;
    try {
      if (lexical::word_count(s) == 0) return;
    } catch (const lexical::LexicalError&) {
      return;
    }
    out.push_back(std::move(s));
  };
  for (char c : text) {
    current += c;
    if (c == '.' || c == '!' || c == '?' || c == '\n') flush();
  }
  flush();
  return out;
}

LexicalEventBackend::LexicalEventBackend(LexicalMatcherOptions options)
    : options_(options) {}

std::string LexicalEventBackend::synthesize_groundtruth(
    std::span<const std::string> captions) {
  if (captions.size() != 5) {
    throw EventError("groundtruth synthesis needs 5 captions, got " +
                     std::to_string(captions.size()));
  }
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < captions.size(); ++j) {
      if (i != j) total += lexical::token_f1(captions[i], captions[j]);
    }
    if (total > best_score) {
      best_score = total;
      best = i;
    }
  }
  auto gt = llm::normalize_whitespace(captions[best]);
  if (gt.empty()) throw EventError("empty caption");
  return gt;
}

EventSet LexicalEventBackend::extract_events(std::string_view description,
                                             EventSource source) {
  auto sentences = split_sentences(description);
  if (sentences.empty()) throw EventError("description has no sentences");
  if (sentences.size() > llm::kMaxEvents) sentences.resize(llm::kMaxEvents);
  for (auto& s : sentences) {
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) {
      s.pop_back();
    }
  }
  return make_event_set(std::move(sentences), source);
}

namespace {

bool negated(std::string_view text) {
  static const std::regex kNegation(
      R"(\b(not|no|never|none|nobody|nothing|without)\b|n't\b)", std::regex::icase);
  return std::regex_search(text.begin(), text.end(), kNegation);
}

}  // namespace

VerdictList LexicalEventBackend::cross_check(std::string_view description,
                                             const EventSet& events) {
  events.validate();
  const auto sentences = split_sentences(description);
  if (sentences.empty()) throw EventError("description has no sentences");
  VerdictList out;
  for (const auto& event : events.events) {
    double best = 0.0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const double f = lexical::token_f1(event, sentences[i]);
      if (f > best) {
        best = f;
        best_index = i;
      }
    }
    Relationship r = Relationship::kNeutral;
    if (best >= options_.entail_threshold) {
      r = Relationship::kEntailment;
      if (options_.negation_heuristic &&
          negated(event) != negated(sentences[best_index])) {
        r = Relationship::kContradiction;
      }
    }
    out.push_back({event, r});
  }
  return out;
}

WeightDerivation derive_weights(EventBackend& backend, const EventSet& gt_events,
                                std::span<const std::string> captions) {
  gt_events.validate();
  if (captions.size() != 5) {
    throw EventError("weight derivation needs 5 captions, got " +
                     std::to_string(captions.size()));
  }
  std::vector<std::future<VerdictList>> pending;
  for (const auto& caption : captions) {
    pending.push_back(std::async(std::launch::async, [&backend, &gt_events, &caption] {
      return backend.cross_check(caption, gt_events);
    }));
  }
  WeightDerivation out;
  for (auto& f : pending) out.caption_verdicts.push_back(f.get());
  std::vector<int> supports(gt_events.size(), 0);
  for (const auto& verdicts : out.caption_verdicts) {
    if (verdicts.size() != gt_events.size()) {
      throw EventError("caption cross-check misaligned with events");
    }
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      if (verdicts[i].relationship == Relationship::kEntailment) ++supports[i];
    }
  }
  out.weighted = weights_from_supports(gt_events, std::move(supports));
  return out;
}

}  // namespace fiova::events
