#include "t411/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "t411/text.hpp"
#include "t411/url.hpp"

namespace t411 {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& why) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + why);
}

template <typename Int>
Int positive(std::string_view value, std::size_t line, bool allow_zero = false) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || (!allow_zero && out == 0))
    fail(line, "expected a positive integer, got '" + std::string(value) + "'");
  return out;
}

}  // namespace

pipeline::EngineConfig GatewayConfig::engine_config() const {
  pipeline::EngineConfig ec;
  ec.base_account = base_account;
  ec.mode = mode;
  ec.poll_interval = poll_interval;
  ec.bus_capacity = bus_capacity;
  ec.webhook_timeout = webhook_timeout;
  ec.state_path = state_path;
  return ec;
}

GatewayConfig parse_config(std::string_view source, const std::filesystem::path& base_dir) {
  GatewayConfig cfg;
  const auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  std::size_t line_no = 0;
  while (!source.empty()) {
    ++line_no;
    const auto nl = source.find('\n');
    const std::string_view raw = source.substr(0, nl);
    source = nl == std::string_view::npos ? std::string_view{} : source.substr(nl + 1);
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key=value");
    const std::string_view key = text::trim(line.substr(0, eq));
    const std::string_view value = text::trim(line.substr(eq + 1));

    if (key == "base_account") {
      if (!is_valid_handle(bare_handle(value))) fail(line_no, "base_account must be a handle");
      cfg.base_account = std::string(bare_handle(value));
    } else if (key == "transport") {
      if (value != "simulated") {
        const auto url = parse_http_url(value);
        if (!url || url->has_query) fail(line_no, "transport must be 'simulated' or an http(s) URL");
      }
      cfg.transport = std::string(value);
    } else if (key == "mode") {
      const auto mode = pipeline::ingest_mode_from_string(value);
      if (!mode) fail(line_no, "mode must be poll or stream");
      cfg.mode = *mode;
    } else if (key == "poll_interval_seconds") {
      cfg.poll_interval = std::chrono::seconds{positive<long>(value, line_no, true)};
    } else if (key == "rest_capacity") {
      cfg.rest.capacity = positive<std::uint32_t>(value, line_no);
    } else if (key == "rest_window_seconds") {
      cfg.rest.window = std::chrono::seconds{positive<long>(value, line_no)};
    } else if (key == "stream_capacity") {
      cfg.streaming.capacity = positive<std::uint32_t>(value, line_no);
    } else if (key == "stream_window_seconds") {
      cfg.streaming.window = std::chrono::seconds{positive<long>(value, line_no)};
    } else if (key == "journal_path") {
      cfg.journal_path = resolve(value);
    } else if (key == "state_path") {
      cfg.state_path = resolve(value);
    } else if (key == "rules_path") {
      cfg.rules_path = resolve(value);
    } else if (key == "control_host") {
      cfg.control_host = std::string(value);
    } else if (key == "control_port") {
      const int port = positive<int>(value, line_no);
      if (port > 65535) fail(line_no, "control_port out of range");
      cfg.control_port = port;
    } else if (key == "parallelism") {
      cfg.parallelism = positive<std::size_t>(value, line_no);
    } else if (key == "webhook_timeout_seconds") {
      cfg.webhook_timeout = std::chrono::seconds{positive<long>(value, line_no)};
    } else if (key == "bus_capacity") {
      cfg.bus_capacity = positive<std::size_t>(value, line_no);
    } else {
      fail(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

GatewayConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return parse_config(bytes.str(), path.parent_path());
}

}  // namespace t411
