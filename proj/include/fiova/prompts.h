// Evaluation prompt templates and their rendering.
//
// Each template is a (system, user) pair. Slots are written {name} in the user
// text; only names listed in PromptTemplate::slots are substituted, so literal
// braces in the instructions ({“score”: [score]}) are left alone.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fiova::llm {

enum class TemplateId {
  kDimConsistency,
  kDimContext,
  kDimCorrectness,
  kDimDetail,
  kDimTemporality,
  kGtSynthesis,
  kEventExtraction,
  kCrossCheck,
};

inline constexpr TemplateId kDimensionTemplates[] = {
    TemplateId::kDimConsistency, TemplateId::kDimContext,
    TemplateId::kDimCorrectness, TemplateId::kDimDetail,
    TemplateId::kDimTemporality};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::kDimConsistency, TemplateId::kDimContext,
    TemplateId::kDimCorrectness, TemplateId::kDimDetail,
    TemplateId::kDimTemporality, TemplateId::kGtSynthesis,
    TemplateId::kEventExtraction, TemplateId::kCrossCheck};

class PromptError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view to_string(TemplateId id);
TemplateId template_from_string(std::string_view name);  // throws PromptError

struct PromptTemplate {
  TemplateId id;
  std::string_view system_text;
  std::string_view user_text_with_slots;
  std::vector<std::string_view> slots;
};

const PromptTemplate& prompt_template(TemplateId id);

struct RenderedPrompt {
  TemplateId template_id;
  std::string system;
  std::string user;

  bool operator==(const RenderedPrompt&) const = default;
};

using SlotMap = std::map<std::string, std::string, std::less<>>;

// The slot set must match the template exactly.
RenderedPrompt render(TemplateId id, const SlotMap& slots);

RenderedPrompt render_dimension(TemplateId dimension, std::string_view caption);
RenderedPrompt render_gt_synthesis(std::span<const std::string> captions);
RenderedPrompt render_event_extraction(std::string_view description);
RenderedPrompt render_cross_check(std::string_view description,
                                  std::span<const std::string> events);

// {"events":[...]} as embedded in the cross-check user message.
std::string format_event_list(std::span<const std::string> events);
std::vector<std::string> parse_event_list(std::string_view text);

// Inverse of render for the user message: recovers slot values, or nullopt
// when the text does not come from the template.
std::optional<SlotMap> match_rendered(TemplateId id, std::string_view user_text);

// Finds the template whose system text equals `system_text`.
std::optional<TemplateId> identify_template(std::string_view system_text);

}  // namespace fiova::llm
