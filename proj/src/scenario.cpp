#include "t411/scenario.hpp"

#include <charconv>
#include <set>

#include <spdlog/spdlog.h>

#include "t411/dispatch.hpp"
#include "t411/engine.hpp"
#include "t411/registry.hpp"
#include "t411/text.hpp"

namespace t411::sim {

namespace {

struct ScriptError {
  std::string message;
};

// Returns the text after the first n whitespace-delimited tokens.
std::string_view rest_after(std::string_view line, std::size_t n) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (i < line.size() && text::is_space(line[i])) ++i;
    while (i < line.size() && !text::is_space(line[i])) ++i;
  }
  return text::trim(line.substr(i));
}

std::optional<Channel> parse_channel(std::string_view name) {
  if (name == "mention") return Channel::Mention;
  if (name == "dm" || name == "direct_message") return Channel::DirectMessage;
  return std::nullopt;
}

std::string expand(std::string_view s, std::string_view var, std::string_view value) {
  std::string out(s);
  for (auto pos = out.find(var); pos != std::string::npos; pos = out.find(var, pos + value.size()))
    out.replace(pos, var.size(), value);
  return out;
}

}  // namespace

ScenarioResult run_scenario(std::string_view script, const ScenarioOptions& options) {
  auto world = std::make_shared<SimWorld>();
  SimTransport transport(world, options.base_account, options.rest, options.streaming);
  registry::RegistryStore registry;
  dispatch::Dispatcher dispatcher;
  botkit::BotServer bots(options.fixtures);
  bots.start();

  pipeline::EngineConfig config;
  config.base_account = options.base_account;
  config.poll_interval = std::chrono::seconds{0};
  config.background = false;
  pipeline::Engine engine(config, transport, registry, dispatcher,
                          options.rules ? *options.rules : chatbot::shipped_rules());
  engine.control(pipeline::ControlCommand::Start);

  ScenarioResult result;
  std::set<std::size_t> claimed;
  std::size_t line_no = 0;
  try {
    while (!script.empty()) {
      ++line_no;
      const auto nl = script.find('\n');
      const std::string_view line = text::trim(script.substr(0, nl));
      script = nl == std::string_view::npos ? std::string_view{} : script.substr(nl + 1);
      if (line.empty() || line.front() == '#') continue;

      const auto tokens = text::split_ws(line);
      const std::string_view op = tokens.front();
      if (op == "REGISTER") {
        if (tokens.size() != 4) throw ScriptError{"REGISTER <key> <webhook> <owner>"};
        try {
          registry.register_service(tokens[1], expand(tokens[2], "${BOTKIT}", bots.base_url()),
                                    tokens[3], world->now());
        } catch (const registry::RegistryError& e) {
          throw ScriptError{std::string("REGISTER failed: ") + e.what()};
        }
      } else if (op == "INJECT") {
        if (tokens.size() < 4) throw ScriptError{"INJECT <mention|dm> <author> <text...>"};
        const auto channel = parse_channel(tokens[1]);
        if (!channel) throw ScriptError{"unknown channel '" + std::string(tokens[1]) + "'"};
        const MessageId id = world->inject(tokens[2], rest_after(line, 3), *channel);
        spdlog::debug("scenario: injected {} from {}", id, tokens[2]);
      } else if (op == "ADVANCE") {
        long seconds = -1;
        if (tokens.size() == 2) std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), seconds);
        if (seconds < 0) throw ScriptError{"ADVANCE <non-negative seconds>"};
        world->advance_clock(std::chrono::seconds{seconds});
      } else if (op == "EXPECT_REPLY") {
        if (tokens.size() < 3) throw ScriptError{"EXPECT_REPLY <author> <text...>"};
        engine.tick();
        engine.drain();
        const std::string author(bare_handle(tokens[1]));
        const std::string_view expected = rest_after(line, 2);
        const auto outbox = world->read_outbox();
        std::optional<std::size_t> next;
        for (std::size_t i = 0; i < outbox.size() && !next; ++i)
          if (!claimed.contains(i) && outbox[i].reply.recipient == author) next = i;
        if (!next) throw ScriptError{"no reply to " + author + " (expected \"" + std::string(expected) + "\")"};
        claimed.insert(*next);
        if (outbox[*next].reply.text != expected)
          throw ScriptError{"reply to " + author + " was \"" + outbox[*next].reply.text +
                            "\", expected \"" + std::string(expected) + "\""};
        ++result.expectations_met;
      } else {
        throw ScriptError{"unknown directive '" + std::string(op) + "'"};
      }
    }
  } catch (const ScriptError& e) {
    result.passed = false;
    result.failed_line = line_no;
    result.message = "line " + std::to_string(line_no) + ": " + e.message;
  }
  engine.control(pipeline::ControlCommand::Stop);
  result.outbox = world->read_outbox();
  return result;
}

}  // namespace t411::sim
