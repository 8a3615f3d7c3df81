// Groundtruth synthesis, event extraction, entailment cross-checks and
// consensus weights.

#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fiova/gateway.h"
#include "fiova/structured.h"
#include "json.hpp"

namespace fiova::events {

using llm::Relationship;
using llm::Verdict;
using VerdictList = std::vector<Verdict>;

class EventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventSource { kGroundtruth, kResponse };

std::string_view to_string(EventSource s);

struct EventSet {
  std::vector<std::string> events;
  EventSource source = EventSource::kGroundtruth;

  std::size_t size() const { return events.size(); }
  void validate() const;  // 1..10 non-empty events
  bool operator==(const EventSet&) const = default;
};

// Trims, collapses whitespace and validates.
EventSet make_event_set(std::vector<std::string> events, EventSource source);

struct WeightedEventSet {
  EventSet events;
  std::vector<double> weights;
  std::vector<int> supports;

  void validate() const;
};

// Raw weight max(support, 1), normalized to sum to one.
WeightedEventSet weights_from_supports(const EventSet& gt_events,
                                       std::vector<int> supports);
WeightedEventSet uniform_weights(const EventSet& gt_events);

// Matches parsed verdicts to the queried events by position. Counts must
// agree; the queried event text is kept so verdicts stay keyed to the query
// even when the model paraphrases or misspells it.
VerdictList align_verdicts(const EventSet& queried, std::vector<Verdict> parsed);

std::size_t count_relationship(const VerdictList& verdicts, Relationship r);

nlohmann::json to_json(const VerdictList& verdicts);
VerdictList verdicts_from_json(const nlohmann::json& doc);

class EventBackend {
 public:
  virtual ~EventBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string synthesize_groundtruth(std::span<const std::string> captions) = 0;
  virtual EventSet extract_events(std::string_view description, EventSource source) = 0;
  virtual VerdictList cross_check(std::string_view description,
                                  const EventSet& events) = 0;
};

class LlmEventBackend : public EventBackend {
 public:
  LlmEventBackend(llm::Gateway& gateway, llm::Decoding decoding);

  std::string name() const override { return "llm"; }
  std::string synthesize_groundtruth(std::span<const std::string> captions) override;
  EventSet extract_events(std::string_view description, EventSource source) override;
  VerdictList cross_check(std::string_view description, const EventSet& events) override;

 private:
  llm::Gateway& gateway_;
  llm::Decoding decoding_;
};

struct LexicalMatcherOptions {
  double entail_threshold = 0.5;
  bool negation_heuristic = false;
};

// Offline stand-in built on token F1: groundtruth is the medoid caption,
// events are the first ten sentences, and an event is entailed when some
// description sentence reaches the F1 threshold.
class LexicalEventBackend : public EventBackend {
 public:
  explicit LexicalEventBackend(LexicalMatcherOptions options = {});

  std::string name() const override { return "lexical"; }
  std::string synthesize_groundtruth(std::span<const std::string> captions) override;
  EventSet extract_events(std::string_view description, EventSource source) override;
  VerdictList cross_check(std::string_view description, const EventSet& events) override;

 private:
  LexicalMatcherOptions options_;
};

std::vector<std::string> split_sentences(std::string_view text);

struct WeightDerivation {
  WeightedEventSet weighted;
  std::vector<VerdictList> caption_verdicts;  // one per caption
};

// support(e) = number of captions whose cross-check entails e. The five
// cross-checks run concurrently.
WeightDerivation derive_weights(EventBackend& backend, const EventSet& gt_events,
                                std::span<const std::string> captions);

}  // namespace fiova::events
