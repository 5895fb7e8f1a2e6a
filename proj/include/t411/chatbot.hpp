#pragma once

// Stateless pattern/effect responder for messages no service claims.
//
// Rule file: UTF-8 lines "pattern<TAB>effect". '#' starts a comment line.
// The first rule line may be "DEFAULT<TAB>effect". Effects substitute $0..$9
// with capture groups and $u with the author; "$$" is a literal '$'.

#include <cstddef>
#include <filesystem>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace t411::chatbot {

enum class ChatbotErrc { BadPattern, BadEffect };

class ChatbotError : public std::runtime_error {
 public:
  ChatbotError(ChatbotErrc code, std::size_t line, const std::string& what)
      : std::runtime_error("rule line " + std::to_string(line) + ": " + what),
        code_(code),
        line_(line) {}
  ChatbotErrc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ChatbotErrc code_;
  std::size_t line_;
};

struct ChatRule {
  std::string pattern;
  std::string effect;
  std::size_t priority = 0;  // declaration index
  std::regex compiled;
  std::size_t group_count = 0;
};

inline constexpr std::string_view kFallbackEffect = "Sorry, I did not get that.";

class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(std::vector<ChatRule> rules, std::string default_effect)
      : rules_(std::move(rules)), default_effect_(std::move(default_effect)) {}

  const std::vector<ChatRule>& rules() const noexcept { return rules_; }
  const std::string& default_effect() const noexcept { return default_effect_; }
  std::size_t size() const noexcept { return rules_.size(); }

 private:
  std::vector<ChatRule> rules_;
  std::string default_effect_{kFallbackEffect};
};

// Compiles every pattern eagerly. Throws ChatbotError naming the line.
RuleSet load_rules(std::string_view source);
RuleSet load_rules_file(const std::filesystem::path& path);

// The rule set that ships with the gateway.
const RuleSet& shipped_rules();
std::string_view shipped_rules_source() noexcept;

// Effect of the first rule whose pattern matches the whole text
// (ASCII case-insensitive), else the default effect.
std::string respond(const RuleSet& rules, std::string_view text, std::string_view author);

}  // namespace t411::chatbot
