// HTTP render service. Usage: climategs_server [--host 127.0.0.1] [--port 8080] [--scene file.ply]

#include "climategs/http_service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"climategs render service", "climategs_server"};
  std::string host = "127.0.0.1", scene;
  int port = 8080;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--scene", scene, "Scene to load at startup");
  CLI11_PARSE(app, argc, argv);

  climategs::Session session;
  if (!scene.empty()) {
    try {
      const auto s = session.load_scene_file(scene);
      std::cerr << "loaded " << s.count << " Gaussians from " << scene << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  httplib::Server server;
  climategs::register_routes(server, session);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}
