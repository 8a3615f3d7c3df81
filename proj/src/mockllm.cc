#include "fiova/mockllm.h"

#include "fiova/events.h"
#include "json.hpp"

namespace fiova::mock {

using nlohmann::json;

int hashed_score(llm::TemplateId id, const std::string& caption) {
  const std::string digest =
      llm::sha256_hex(std::string(llm::to_string(id)) + "\n" + caption);
  return 3 + static_cast<int>(std::stoul(digest.substr(0, 8), nullptr, 16) % 8);
}

std::string mock_reply(const llm::RenderedPrompt& prompt) {
  const auto id = llm::identify_template(prompt.system);
  if (!id) throw MockError("unrecognized system prompt");
  const auto slots = llm::match_rendered(*id, prompt.user);
  if (!slots) throw MockError("user message does not match template " +
                              std::string(llm::to_string(*id)));
  events::LexicalEventBackend backend({.entail_threshold = 0.5,
                                       .negation_heuristic = true});
  switch (*id) {
    case llm::TemplateId::kGtSynthesis: {
      std::vector<std::string> captions;
      for (int i = 1; i <= 5; ++i) captions.push_back(slots->at("caption" + std::to_string(i)));
      return json{{"gt", {backend.synthesize_groundtruth(captions)}}}.dump();
    }
    case llm::TemplateId::kEventExtraction: {
      const auto set = backend.extract_events(slots->at("caption"),
                                              events::EventSource::kResponse);
      return json{{"events", set.events}}.dump();
    }
    case llm::TemplateId::kCrossCheck: {
      auto set = events::make_event_set(llm::parse_event_list(slots->at("events")),
                                        events::EventSource::kGroundtruth);
      return events::to_json(backend.cross_check(slots->at("description"), set)).dump();
    }
    default:
      return json{{"score", hashed_score(*id, slots->at("caption"))}}.dump();
  }
}

llm::HttpResult handle_chat_request(const std::string& request_body) {
  try {
    const json req = json::parse(request_body);
    llm::RenderedPrompt prompt;
    for (const auto& m : req.at("messages")) {
      const auto role = m.at("role").get<std::string>();
      if (role == "system") prompt.system = m.at("content").get<std::string>();
      if (role == "user") prompt.user = m.at("content").get<std::string>();
    }
    const std::string content = mock_reply(prompt);
    const json resp = {
        {"object", "chat.completion"},
        {"model", req.value("model", "")},
        {"choices", json::array({{{"index", 0},
                                  {"finish_reason", "stop"},
                                  {"message", {{"role", "assistant"},
                                               {"content", content}}}}})}};
    return {200, resp.dump(), ""};
  } catch (const std::exception& e) {
    return {400, json{{"error", {{"message", e.what()}}}}.dump(), e.what()};
  }
}

}  // namespace fiova::mock
