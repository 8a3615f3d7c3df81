// Offline OpenAI-compatible chat endpoint for fixture recording and demos.
#include <iostream>

#include "CLI11.hpp"
#include "fiova/mockllm.h"
#include "httplib.h"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic mock chat completion server"};
  std::string host = "127.0.0.1";
  int port = 8089;
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "bind port (0 picks a free port)");
  CLI11_PARSE(app, argc, argv);

  httplib::Server server;
  server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    const auto r = fiova::mock::handle_chat_request(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  if (port == 0) port = server.bind_to_any_port(host);
  else if (!server.bind_to_port(host, port)) port = -1;
  if (port < 0) {
    std::cerr << "cannot bind " << host << "\n";
    return 1;
  }
  std::cout << "http://" << host << ":" << port << "/v1" << std::endl;
  return server.listen_after_bind() ? 0 : 1;
}
