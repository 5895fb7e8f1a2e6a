#pragma once

// HTTP control plane:
//   POST   /control/start | /control/stop, GET /control/status
//   POST   /admin/services          {"key":..,"webhook":..,"owner":..}
//   DELETE /admin/services/{key}?owner=..
//   GET    /admin/services

#include <memory>
#include <string>
#include <thread>

#include "t411/engine.hpp"
#include "t411/registry.hpp"

namespace httplib {
class Server;
}

namespace t411::pipeline {

class ControlServer {
 public:
  ControlServer(Engine& engine, registry::RegistryStore& registry);
  ~ControlServer();

  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  // Blocks in the calling thread until stop().
  void listen(const std::string& host, int port);

 private:
  void install_routes();

  Engine& engine_;
  registry::RegistryStore& registry_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

nlohmann::json registration_json(const ServiceRegistration& reg);

}  // namespace t411::pipeline
