// gateway: run the T411 auto-responder, manage services, replay scenarios.

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "t411/botkit.hpp"
#include "t411/chatbot.hpp"
#include "t411/config.hpp"
#include "t411/control_api.hpp"
#include "t411/engine.hpp"
#include "t411/http_transport.hpp"
#include "t411/registry.hpp"
#include "t411/scenario.hpp"
#include "t411/simulator.hpp"

#ifndef T411_DATA_DIR
#define T411_DATA_DIR "data"
#endif

namespace {

using namespace t411;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return bytes.str();
}

sigset_t termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

// Blocks until SIGINT/SIGTERM. Signals must already be blocked in all threads.
void wait_for_termination() {
  const sigset_t set = termination_signals();
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("received signal {}, shutting down", sig);
}

int run_gateway(const std::string& config_path) {
  const GatewayConfig cfg = load_config(config_path);
  const sigset_t set = termination_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  std::shared_ptr<sim::SimWorld> world;
  std::unique_ptr<transport::Transport> transport;
  if (cfg.transport == "simulated") {
    world = std::make_shared<sim::SimWorld>();
    transport = std::make_unique<sim::SimTransport>(world, cfg.base_account, cfg.rest, cfg.streaming);
  } else {
    transport = std::make_unique<transport::HttpTransport>(
        transport::TransportEndpoint{cfg.transport, cfg.base_account}, cfg.rest, cfg.streaming);
  }

  registry::RegistryStore registry(cfg.journal_path);
  registry.compact();
  const chatbot::RuleSet rules =
      cfg.rules_path.empty() ? chatbot::shipped_rules() : chatbot::load_rules_file(cfg.rules_path);
  dispatch::Dispatcher dispatcher(dispatch::execute, cfg.parallelism);
  pipeline::Engine engine(cfg.engine_config(), *transport, registry, dispatcher, rules);

  pipeline::ControlServer control(engine, registry);
  control.start(cfg.control_host, cfg.control_port);
  engine.control(pipeline::ControlCommand::Start);
  wait_for_termination();
  engine.control(pipeline::ControlCommand::Stop);
  control.stop();
  return 0;
}

httplib::Result call_control(const std::string& base, const std::string& method,
                             const std::string& path, const std::string& body = {}) {
  httplib::Client client(base);
  client.set_connection_timeout(std::chrono::seconds{5});
  if (method == "GET") return client.Get(path);
  if (method == "DELETE") return client.Delete(path);
  return client.Post(path, body, "application/json");
}

int print_response(const httplib::Result& res) {
  if (!res) {
    std::cerr << "gateway: control API unreachable: " << httplib::to_string(res.error()) << "\n";
    return 2;
  }
  const auto j = json::parse(res->body, nullptr, false);
  std::cout << (j.is_discarded() ? res->body : j.dump(2)) << "\n";
  return res->status / 100 == 2 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"T411 gateway: microblog messages to webhooks and back"};
  app.require_subcommand(1);
  std::string control_url = "http://127.0.0.1:8411";
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  auto* run = app.add_subcommand("run", "Run the gateway and its control API");
  std::string config_path;
  run->add_option("--config", config_path, "Config file")->required();

  auto* reg = app.add_subcommand("register", "Reserve a key for a webhook");
  std::string key, webhook, owner, journal;
  reg->add_option("key", key)->required();
  reg->add_option("webhook", webhook)->required();
  reg->add_option("--owner", owner)->required();
  reg->add_option("--control", control_url, "Control API base URL");
  reg->add_option("--journal", journal, "Edit this journal directly instead of calling a running gateway");

  auto* unreg = app.add_subcommand("unregister", "Release a key");
  unreg->add_option("key", key)->required();
  unreg->add_option("--owner", owner)->required();
  unreg->add_option("--control", control_url, "Control API base URL");
  unreg->add_option("--journal", journal, "Edit this journal directly");

  auto* services = app.add_subcommand("services", "List registered services");
  services->add_option("--control", control_url, "Control API base URL");
  services->add_option("--journal", journal, "Read this journal directly");

  auto* status = app.add_subcommand("status", "Show engine status");
  status->add_option("--control", control_url, "Control API base URL");
  auto* start = app.add_subcommand("start", "Start the engine");
  start->add_option("--control", control_url, "Control API base URL");
  auto* stop = app.add_subcommand("stop", "Stop the engine");
  stop->add_option("--control", control_url, "Control API base URL");

  auto* simulate = app.add_subcommand("simulate", "Replay a scenario script against the simulator");
  std::string script_path, fixtures_path = T411_DATA_DIR "/fixtures.json", rules_path;
  std::string base_account = "t411";
  simulate->add_option("--script", script_path)->required();
  simulate->add_option("--fixtures", fixtures_path, "Bot fixture tables");
  simulate->add_option("--rules", rules_path, "Chatbot rule file (default: shipped rules)");
  simulate->add_option("--base-account", base_account);

  auto* bots = app.add_subcommand("bots", "Serve the example webhooks (quote, weather, echo)");
  std::string bots_host = "127.0.0.1";
  int bots_port = 8080;
  bots->add_option("--fixtures", fixtures_path, "Bot fixture tables");
  bots->add_option("--host", bots_host);
  bots->add_option("--port", bots_port);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return run_gateway(config_path);

    if (*reg) {
      if (!journal.empty()) {
        registry::RegistryStore store(journal);
        std::cout << pipeline::registration_json(store.register_service(key, webhook, owner)).dump(2) << "\n";
        return 0;
      }
      return print_response(call_control(control_url, "POST", "/admin/services",
                                         json{{"key", key}, {"webhook", webhook}, {"owner", owner}}.dump()));
    }
    if (*unreg) {
      if (!journal.empty()) {
        registry::RegistryStore store(journal);
        store.unregister(key, owner);
        std::cout << json{{"removed", key}}.dump(2) << "\n";
        return 0;
      }
      return print_response(call_control(control_url, "DELETE",
                                         "/admin/services/" + key + "?owner=" + dispatch::percent_encode(owner)));
    }
    if (*services) {
      if (!journal.empty()) {
        registry::RegistryStore store(journal);
        json list = json::array();
        for (const auto& r : store.list()) list.push_back(pipeline::registration_json(r));
        std::cout << json{{"services", list}}.dump(2) << "\n";
        return 0;
      }
      return print_response(call_control(control_url, "GET", "/admin/services"));
    }
    if (*status) return print_response(call_control(control_url, "GET", "/control/status"));
    if (*start) return print_response(call_control(control_url, "POST", "/control/start"));
    if (*stop) return print_response(call_control(control_url, "POST", "/control/stop"));

    if (*simulate) {
      sim::ScenarioOptions options;
      options.base_account = base_account;
      options.fixtures = botkit::load_fixtures_file(fixtures_path);
      std::optional<chatbot::RuleSet> rules;
      if (!rules_path.empty()) {
        rules = chatbot::load_rules_file(rules_path);
        options.rules = &*rules;
      }
      const auto result = sim::run_scenario(read_file(script_path), options);
      for (const auto& posted : result.outbox)
        std::cout << "[" << posted.id << "] " << to_string(posted.reply.channel) << " -> "
                  << posted.reply.recipient << ": " << posted.reply.text << "\n";
      if (!result.passed) {
        std::cerr << "FAIL " << result.message << "\n";
        return 1;
      }
      std::cout << "PASS " << result.expectations_met << " expectations\n";
      return 0;
    }

    if (*bots) {
      const sigset_t set = termination_signals();
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      botkit::BotServer server(botkit::load_fixtures_file(fixtures_path));
      server.start(bots_host, bots_port);
      std::cout << "serving " << server.base_url() << "/{quote,weather,echo}\n";
      wait_for_termination();
      server.stop();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "gateway: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
