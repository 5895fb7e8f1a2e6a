#pragma once

// Gateway config: UTF-8 "key = value" lines, '#' comments. Relative paths
// resolve against the config file's directory.
//
//   base_account, transport (simulated | URL), mode (poll | stream),
//   poll_interval_seconds, rest_capacity, rest_window_seconds,
//   stream_capacity, stream_window_seconds, journal_path, state_path,
//   rules_path, control_host, control_port, parallelism,
//   webhook_timeout_seconds, bus_capacity

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include "t411/engine.hpp"
#include "t411/transport.hpp"

namespace t411 {

struct GatewayConfig {
  std::string base_account = "t411";
  std::string transport = "simulated";
  pipeline::IngestMode mode = pipeline::IngestMode::Poll;
  std::chrono::seconds poll_interval{60};
  transport::BudgetLimits rest = transport::kDefaultRestLimits;
  transport::BudgetLimits streaming = transport::kDefaultStreamingLimits;
  std::filesystem::path journal_path = "registry.journal";
  std::filesystem::path state_path;
  std::filesystem::path rules_path;  // empty: shipped rules
  std::string control_host = "127.0.0.1";
  int control_port = 8411;
  std::size_t parallelism = 4;
  std::chrono::seconds webhook_timeout = dispatch::kDefaultWebhookTimeout;
  std::size_t bus_capacity = pipeline::MessageBus::kDefaultCapacity;

  pipeline::EngineConfig engine_config() const;
};

// Throws std::invalid_argument naming the offending line.
GatewayConfig parse_config(std::string_view source, const std::filesystem::path& base_dir = {});
GatewayConfig load_config(const std::filesystem::path& path);

}  // namespace t411
