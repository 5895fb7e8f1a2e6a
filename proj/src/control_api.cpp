#include "t411/control_api.hpp"

#include <spdlog/spdlog.h>

#include "httplib.h"

namespace t411::pipeline {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(registry::RegistryErrc code) {
  switch (code) {
    case registry::RegistryErrc::KeyTaken: return 409;
    case registry::RegistryErrc::NotFound: return 404;
    case registry::RegistryErrc::NotOwner: return 403;
    case registry::RegistryErrc::CorruptJournal:
    case registry::RegistryErrc::JournalIo: return 500;
    default: return 400;
  }
}

}  // namespace

json registration_json(const ServiceRegistration& reg) {
  return json{{"key", reg.key},
              {"webhook", reg.webhook},
              {"owner", reg.owner},
              {"registered_at", format_timestamp(reg.registered_at)}};
}

ControlServer::ControlServer(Engine& engine, registry::RegistryStore& registry)
    : engine_(engine), registry_(registry), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::install_routes() {
  server_->Post("/control/start", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, engine_.control(ControlCommand::Start).to_json());
  });
  server_->Post("/control/stop", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, engine_.control(ControlCommand::Stop).to_json());
  });
  server_->Get("/control/status", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, engine_.control(ControlCommand::Status).to_json());
  });

  server_->Get("/admin/services", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& reg : registry_.list()) list.push_back(registration_json(reg));
    reply_json(res, 200, json{{"services", list}});
  });
  server_->Post("/admin/services", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    const auto field = [&](const char* name) -> std::optional<std::string> {
      if (!body.is_object() || !body.contains(name) || !body[name].is_string()) return std::nullopt;
      return body[name].get<std::string>();
    };
    const auto key = field("key"), webhook = field("webhook"), owner = field("owner");
    if (!key || !webhook || !owner) {
      reply_json(res, 400, json{{"error", "BadRequest"}, {"message", "need key, webhook and owner strings"}});
      return;
    }
    try {
      reply_json(res, 201, registration_json(registry_.register_service(*key, *webhook, *owner)));
    } catch (const registry::RegistryError& e) {
      reply_json(res, status_for(e.code()), json{{"error", to_string(e.code())}, {"message", e.what()}});
    }
  });
  server_->Delete(R"(/admin/services/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("owner")) {
      reply_json(res, 400, json{{"error", "BadRequest"}, {"message", "owner query parameter is required"}});
      return;
    }
    try {
      registry_.unregister(req.matches[1].str(), req.get_param_value("owner"));
      reply_json(res, 200, json{{"removed", req.matches[1].str()}});
    } catch (const registry::RegistryError& e) {
      reply_json(res, status_for(e.code()), json{{"error", to_string(e.code())}, {"message", e.what()}});
    }
  });
}

int ControlServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host)
                              : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw std::runtime_error("control api: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("control api on http://{}:{}", host, bound);
  return bound;
}

void ControlServer::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port))
    throw std::runtime_error("control api: cannot bind " + host + ":" + std::to_string(port));
  spdlog::info("control api on http://{}:{}", host, port);
  server_->listen_after_bind();
}

void ControlServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace t411::pipeline
