// Deterministic offline chat model. Recognizes the eight prompt templates and
// answers them from the lexical matcher, with hashed dimension scores. Used
// to record fixture caches and to exercise the live HTTP path without a
// provider.
#pragma once

#include <stdexcept>
#include <string>

#include "fiova/gateway.h"
#include "fiova/prompts.h"

namespace fiova::mock {

class MockError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Score in 3..10 derived from the template and caption.
int hashed_score(llm::TemplateId id, const std::string& caption);

// Throws MockError when the prompt is not one of the known templates.
std::string mock_reply(const llm::RenderedPrompt& prompt);

// Handles an OpenAI-style request body and returns the response body.
// 400 with an error message when the request cannot be answered.
llm::HttpResult handle_chat_request(const std::string& request_body);

class MockTransport : public llm::ChatTransport {
 public:
  llm::HttpResult post_chat(const std::string& body) override {
    return handle_chat_request(body);
  }
};

}  // namespace fiova::mock
