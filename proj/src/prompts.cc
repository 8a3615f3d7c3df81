#include "fiova/prompts.h"

#include <array>

#include "json.hpp"

namespace fiova::llm {
namespace {

constexpr std::string_view kScoreUser =
    R"(Please evaluate the following video caption:
Provided caption: “{caption}”
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kConsistencySystem =
    R"(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based caption. Your task is to compare the provided text and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS:
- Focus on the consistency of the text with the expected content or background. The text should correspond to the correct information and should not contain any contradictions or significant differences.
- The text must be consistent in the information it provides about the content.
- Consider synonyms or paraphrases as valid matches, but only if they maintain the consistency in the conveyed information.
- Evaluate the consistency of the text.
- DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kContextSystem =
    R"(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based caption. Your task is to compare the provided text and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS:
- Evaluate whether the text aligns with the overall context of the expected content or background. It should not provide information that is out of context or misaligned.
- The text must capture the main themes and sentiments relevant to the content.
- Consider synonyms or paraphrases as valid matches.
- Provide your evaluation of the contextual understanding of the text.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kCorrectnessSystem =
    R"(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based caption. Your task is to compare the provided text and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS:
- Focus on the factual correctness of the text. The text should not contain any misinterpretations or misinformation.
- The text must be factually accurate and align with the expected content or context.
- Consider synonyms or paraphrases as valid matches.
- Evaluate the factual accuracy of the text.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kDetailSystem =
    R"(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based caption. Your task is to compare the provided text and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS:
- Check if the text covers all major points relevant to the content. The text should not leave out any key aspects.
- Evaluate whether the text includes specific details rather than just generic points. It should provide comprehensive information that is tied to specific elements of the content.
- Consider synonyms or paraphrases as valid matches.
- Provide a single evaluation score that reflects the level of detail orientation of the text, considering both completeness and specificity.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kTemporalitySystem =
    R"(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based caption. Your task is to compare the provided text and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS:
- Focus on the temporal consistency of the text. It should correctly reflect the sequence of events or details as they are presented.
- Consider synonyms or paraphrases as valid matches, but only if the temporal order is maintained.
- Evaluate the temporal accuracy of the text.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide a single evaluation score from 1 to 10. For example, your response should look like this: {“score”: [score]}.)";

constexpr std::string_view kGtSystem =
    R"(Given five video descriptions. Combine the five video descriptions into a single, coherent description that captures the essence of the video clip.
Please generate the response in the form of a Python dictionary string with keys “gt”. The value of “gt” is a List(str), of which is groundtruth for this video description.)";

constexpr std::string_view kGtUser =
    R"(Video description 1: “{caption1}”
Video description 2: “{caption2}”
Video description 3: “{caption3}”
Video description 4: “{caption4}”
Video description 5: “{caption5}”
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION.
Only provide one Python dictionary string. For example, your response should look like this: {“gt”: [gt]})";

constexpr std::string_view kEventsSystem =
    R"(Given a video description. Extract at most 10 key events from the video description paragraph.
Requirements:
- Every event is represented by a brief sentence within 10 words, with a subject, a predicate and optionally an object,avoid unnecessary appearance descriptions.
- Every event must be atomic, meaning that it can not be further split into multiple events.
- Scene cuts and camera motions are NOT events.
- Substitute pronouns by the nouns they refer to.
Please generate the response in the form of a Python dictionary string with keys “events”. The value of “events” is a List(str), of which each item is an event.)";

constexpr std::string_view kEventsUser =
    R"(Video description: “{caption}”
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. For example, your response should look like this: {“events”: [event1, event2,...]})";

constexpr std::string_view kCrossCheckSystem =
    R"(Given a video description and a list of events. For each event, classify the relationship between the video description and the event into three classes: entailment, neutral, contradiction.
- “entailment” means that the video description entails the event.
- “contradiction” means that some detail in the video description contradicts with the event.
- “neutral” means that the relationship is neither “entailment” or “contradiction”.
Output a list in Json format: [ {“event”: “copy an event here”, “relationship”: “put class name here” }, ... ].)";

constexpr std::string_view kCrossCheckUser =
    R"(Video description: “{description}”
Events: “{events}”
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only output the JSON.
Output:)";

const std::array<PromptTemplate, 8>& templates() {
  static const std::array<PromptTemplate, 8> all = {{
      {TemplateId::kDimConsistency, kConsistencySystem, kScoreUser, {"caption"}},
      {TemplateId::kDimContext, kContextSystem, kScoreUser, {"caption"}},
      {TemplateId::kDimCorrectness, kCorrectnessSystem, kScoreUser, {"caption"}},
      {TemplateId::kDimDetail, kDetailSystem, kScoreUser, {"caption"}},
      {TemplateId::kDimTemporality, kTemporalitySystem, kScoreUser, {"caption"}},
      {TemplateId::kGtSynthesis, kGtSystem, kGtUser,
       {"caption1", "caption2", "caption3", "caption4", "caption5"}},
      {TemplateId::kEventExtraction, kEventsSystem, kEventsUser, {"caption"}},
      {TemplateId::kCrossCheck, kCrossCheckSystem, kCrossCheckUser,
       {"description", "events"}},
  }};
  return all;
}

// A template's user text as alternating literal / slot pieces.
struct Piece {
  bool is_slot;
  std::string_view text;
};

std::vector<Piece> split_template(const PromptTemplate& tpl) {
  std::vector<Piece> pieces;
  const std::string_view text = tpl.user_text_with_slots;
  std::size_t literal_start = 0;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const auto close = text.find('}', pos);
    if (close == std::string_view::npos) break;
    const auto name = text.substr(pos + 1, close - pos - 1);
    bool known = false;
    for (const auto& s : tpl.slots) known = known || s == name;
    if (!known) {
      ++pos;
      continue;
    }
    pieces.push_back({false, text.substr(literal_start, pos - literal_start)});
    pieces.push_back({true, name});
    pos = literal_start = close + 1;
  }
  pieces.push_back({false, text.substr(literal_start)});
  return pieces;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::kDimConsistency: return "dim_consistency";
    case TemplateId::kDimContext: return "dim_context";
    case TemplateId::kDimCorrectness: return "dim_correctness";
    case TemplateId::kDimDetail: return "dim_detail";
    case TemplateId::kDimTemporality: return "dim_temporality";
    case TemplateId::kGtSynthesis: return "gt_synthesis";
    case TemplateId::kEventExtraction: return "event_extraction";
    case TemplateId::kCrossCheck: return "cross_check";
  }
  return "unknown";
}

TemplateId template_from_string(std::string_view name) {
  for (auto id : kAllTemplates) {
    if (to_string(id) == name) return id;
  }
  throw PromptError("unknown template \"" + std::string(name) + "\"");
}

const PromptTemplate& prompt_template(TemplateId id) {
  return templates().at(static_cast<std::size_t>(id));
}

RenderedPrompt render(TemplateId id, const SlotMap& slots) {
  const auto& tpl = prompt_template(id);
  for (const auto& name : tpl.slots) {
    if (slots.find(name) == slots.end()) {
      throw PromptError("template " + std::string(to_string(id)) +
                        " is missing slot \"" + std::string(name) + "\"");
    }
  }
  if (slots.size() != tpl.slots.size()) {
    throw PromptError("template " + std::string(to_string(id)) + " takes " +
                      std::to_string(tpl.slots.size()) + " slots, got " +
                      std::to_string(slots.size()));
  }
  RenderedPrompt out{id, std::string(tpl.system_text), {}};
  for (const auto& piece : split_template(tpl)) {
    if (piece.is_slot) {
      out.user += slots.find(piece.text)->second;
    } else {
      out.user += piece.text;
    }
  }
  return out;
}

RenderedPrompt render_dimension(TemplateId dimension, std::string_view caption) {
  bool is_dim = false;
  for (auto d : kDimensionTemplates) is_dim = is_dim || d == dimension;
  if (!is_dim) throw PromptError("not a dimension template");
  return render(dimension, {{"caption", std::string(caption)}});
}

RenderedPrompt render_gt_synthesis(std::span<const std::string> captions) {
  if (captions.size() != 5) {
    throw PromptError("gt_synthesis needs 5 captions, got " +
                      std::to_string(captions.size()));
  }
  SlotMap slots;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    slots["caption" + std::to_string(i + 1)] = captions[i];
  }
  return render(TemplateId::kGtSynthesis, slots);
}

RenderedPrompt render_event_extraction(std::string_view description) {
  return render(TemplateId::kEventExtraction,
                {{"caption", std::string(description)}});
}

RenderedPrompt render_cross_check(std::string_view description,
                                  std::span<const std::string> events) {
  if (events.empty()) throw PromptError("cross_check needs at least one event");
  return render(TemplateId::kCrossCheck,
                {{"description", std::string(description)},
                 {"events", format_event_list(events)}});
}

std::string format_event_list(std::span<const std::string> events) {
  nlohmann::json doc = {{"events", nlohmann::json::array()}};
  for (const auto& e : events) doc["events"].push_back(e);
  return doc.dump();
}

std::vector<std::string> parse_event_list(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    return doc.at("events").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw PromptError(std::string("malformed event list: ") + e.what());
  }
}

std::optional<SlotMap> match_rendered(TemplateId id, std::string_view user_text) {
  const auto pieces = split_template(prompt_template(id));
  SlotMap slots;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& piece = pieces[i];
    if (!piece.is_slot) {
      if (user_text.substr(pos, piece.text.size()) != piece.text) {
        return std::nullopt;
      }
      pos += piece.text.size();
      continue;
    }
    // Slot value runs up to the next literal; the final literal anchors at
    // the end so values may contain text resembling it.
    const auto& next = pieces[i + 1].text;
    std::size_t end;
    if (i + 2 == pieces.size()) {
      if (user_text.size() < pos + next.size()) return std::nullopt;
      end = user_text.size() - next.size();
    } else {
      end = user_text.find(next, pos);
      if (end == std::string_view::npos) return std::nullopt;
    }
    slots[std::string(piece.text)] = std::string(user_text.substr(pos, end - pos));
    pos = end;
  }
  if (pos != user_text.size()) return std::nullopt;
  return slots;
}

std::optional<TemplateId> identify_template(std::string_view system_text) {
  for (const auto& tpl : templates()) {
    if (tpl.system_text == system_text) return tpl.id;
  }
  return std::nullopt;
}

}  // namespace fiova::llm
