#pragma once

// Example services behind the gateway: stock quotes, weather, echo. Live
// feeds are replaced by fixture tables loaded from JSON:
//   {"quotes":{"ORCL":{"price":"39.50","change":"+0.12"}},"weather":{"msk":"..."}}

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

namespace httplib {
class Server;
}

namespace t411::botkit {

struct Quote {
  std::string symbol;
  std::string price;
  std::string change;
};

using QuoteTable = std::map<std::string, Quote>;         // uppercase symbol -> quote
using WeatherTable = std::map<std::string, std::string>;  // lowercase city -> forecast

struct Fixtures {
  QuoteTable quotes;
  WeatherTable weather;
};

// Throws std::invalid_argument on malformed JSON, lowercase symbols,
// uppercase city codes or duplicates.
Fixtures load_fixtures(std::string_view json);
Fixtures load_fixtures_file(const std::filesystem::path& path);

// Mirrors the original JSP quote bot: "unknown" without t, "<t>?? could not get
// ticket" when no symbol follows the key, else "<SYMBOL> : <price> <change>".
std::string quote_handler(std::optional<std::string_view> t, std::string_view u,
                          const QuoteTable& quotes);

std::string weather_handler(std::optional<std::string_view> t, std::string_view u,
                            const WeatherTable& weather);

std::string echo_handler(std::string_view t, std::string_view u);

// Serves GET /quote, /weather and /echo as text/plain; charset=utf-8.
class BotServer {
 public:
  explicit BotServer(Fixtures fixtures);
  ~BotServer();

  BotServer(const BotServer&) = delete;
  BotServer& operator=(const BotServer&) = delete;

  // Binds (port 0 picks a free one) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  // "http://host:port"
  std::string base_url() const;

 private:
  Fixtures fixtures_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace t411::botkit
