#pragma once

// Scripted runs of the whole gateway against the simulator, with the
// example services served in-process. One directive per line:
//
//   REGISTER <key> <webhook> <owner>     ${BOTKIT} expands to the bot server URL
//   INJECT <mention|dm> <author> <text...>
//   ADVANCE <seconds>
//   EXPECT_REPLY <author> <text...>      ticks, processes, then checks the
//                                        author's next unclaimed reply
//
// Blank lines and lines starting with '#' are ignored.

#include <string>
#include <string_view>
#include <vector>

#include "t411/botkit.hpp"
#include "t411/chatbot.hpp"
#include "t411/simulator.hpp"

namespace t411::sim {

struct ScenarioOptions {
  std::string base_account = "t411";
  botkit::Fixtures fixtures;
  const chatbot::RuleSet* rules = nullptr;  // null: shipped rules
  transport::BudgetLimits rest = transport::kDefaultRestLimits;
  transport::BudgetLimits streaming = transport::kDefaultStreamingLimits;
};

struct ScenarioResult {
  bool passed = true;
  std::size_t failed_line = 0;
  std::string message;
  std::size_t expectations_met = 0;
  std::vector<PostedReply> outbox;
};

ScenarioResult run_scenario(std::string_view script, const ScenarioOptions& options);

}  // namespace t411::sim
