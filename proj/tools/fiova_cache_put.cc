// Stores known replies in a completion cache so later runs replay them.
// Input: JSON array of {template, slots: {name: text}, reply}.
#include <iostream>

#include "CLI11.hpp"
#include "fiova/file_io.h"
#include "fiova/gateway.h"
#include "fiova/prompts.h"

int main(int argc, char** argv) {
  CLI::App app{"Record fixed replies into a completion cache"};
  std::string spec, cache_dir, model_id;
  double temperature = 0.0;
  int max_tokens = 1024;
  app.add_option("spec", spec, "JSON array of {template, slots, reply}")->required();
  app.add_option("--cache-dir", cache_dir, "cache directory")->required();
  app.add_option("--model-id", model_id, "model identifier")->required();
  app.add_option("--temperature", temperature, "sampling temperature");
  app.add_option("--max-tokens", max_tokens, "completion token limit");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto doc = nlohmann::json::parse(fiova::io::read_file(spec));
    fiova::llm::GatewayConfig config;
    config.cache_dir = cache_dir;
    config.cache_only = true;
    fiova::llm::Gateway gateway(config, nullptr);
    const fiova::llm::Decoding decoding{model_id, temperature, max_tokens};
    for (const auto& entry : doc) {
      fiova::llm::SlotMap slots;
      for (const auto& [k, v] : entry.at("slots").items()) slots[k] = v.get<std::string>();
      const auto id = fiova::llm::template_from_string(entry.at("template").get<std::string>());
      const auto prompt = fiova::llm::render(id, slots);
      gateway.store(prompt, decoding, entry.at("reply").get<std::string>());
      std::cout << fiova::llm::cache_key(prompt, decoding) << " "
                << fiova::llm::to_string(id) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
