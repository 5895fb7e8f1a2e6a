#include "t411/botkit.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "t411/text.hpp"

namespace t411::botkit {

namespace {

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

// Everything after the first space, the way the original JSP bot used indexOf(" ").
std::optional<std::string_view> after_key(std::string_view t) {
  const auto i = t.find(' ');
  if (i == std::string_view::npos || i == 0) return std::nullopt;
  return text::trim(t.substr(i + 1));
}

}  // namespace

Fixtures load_fixtures(std::string_view source) {
  const auto j = nlohmann::json::parse(source, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("fixtures: not a JSON object");
  Fixtures out;
  if (const auto quotes = j.find("quotes"); quotes != j.end()) {
    if (!quotes->is_object()) throw std::invalid_argument("fixtures: 'quotes' must be an object");
    for (const auto& [symbol, rec] : quotes->items()) {
      if (symbol.empty() || text::to_upper_ascii(symbol) != symbol)
        throw std::invalid_argument("fixtures: symbol '" + symbol + "' must be uppercase");
      if (!rec.is_object() || !rec.contains("price") || !rec.contains("change") ||
          !rec["price"].is_string() || !rec["change"].is_string())
        throw std::invalid_argument("fixtures: quote '" + symbol + "' needs price and change strings");
      out.quotes.emplace(symbol, Quote{symbol, rec["price"].get<std::string>(), rec["change"].get<std::string>()});
    }
  }
  if (const auto weather = j.find("weather"); weather != j.end()) {
    if (!weather->is_object()) throw std::invalid_argument("fixtures: 'weather' must be an object");
    for (const auto& [city, line] : weather->items()) {
      if (city.empty() || text::to_lower_ascii(city) != city)
        throw std::invalid_argument("fixtures: city '" + city + "' must be lowercase");
      if (!line.is_string()) throw std::invalid_argument("fixtures: forecast for '" + city + "' must be a string");
      out.weather.emplace(city, line.get<std::string>());
    }
  }
  return out;
}

Fixtures load_fixtures_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read fixtures " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return load_fixtures(bytes.str());
}

std::string quote_handler(std::optional<std::string_view> t, std::string_view,
                          const QuoteTable& quotes) {
  if (!t || t->empty()) return "unknown";
  const auto rest = after_key(*t);
  if (!rest) return std::string(*t) + "?? could not get ticket";
  const std::string symbol = text::to_upper_ascii(*rest);
  const auto it = quotes.find(symbol);
  if (it == quotes.end()) return symbol + "?? could not get ticket";
  return it->second.symbol + " : " + it->second.price + " " + it->second.change;
}

std::string weather_handler(std::optional<std::string_view> t, std::string_view,
                            const WeatherTable& weather) {
  const auto rest = t ? after_key(*t) : std::nullopt;
  const auto tokens = rest ? text::split_ws(*rest) : std::vector<std::string_view>{};
  if (tokens.empty()) return "no forecast";
  const std::string city = text::to_lower_ascii(tokens.front());
  const auto it = weather.find(city);
  if (it == weather.end()) return "no forecast for " + city;
  return it->second;
}

std::string echo_handler(std::string_view t, std::string_view u) {
  return std::string(u) + ": " + std::string(t);
}

BotServer::BotServer(Fixtures fixtures)
    : fixtures_(std::move(fixtures)), server_(std::make_unique<httplib::Server>()) {
  constexpr const char* kType = "text/plain; charset=utf-8";
  server_->Get("/quote", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(quote_handler(param(req, "t"), param(req, "u").value_or(""), fixtures_.quotes) + "\n", kType);
  });
  server_->Get("/weather", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(weather_handler(param(req, "t"), param(req, "u").value_or(""), fixtures_.weather) + "\n", kType);
  });
  server_->Get("/echo", [](const httplib::Request& req, httplib::Response& res) {
    res.set_content(echo_handler(param(req, "t").value_or(""), param(req, "u").value_or("")) + "\n", kType);
  });
}

BotServer::~BotServer() { stop(); }

int BotServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw std::runtime_error("botkit: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("botkit serving on {}", base_url());
  return port_;
}

void BotServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string BotServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace t411::botkit
