#include "t411/chatbot.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "t411/text.hpp"

namespace t411::chatbot {

namespace {

constexpr std::string_view kShippedSource =
#include "shipped_rules.inc"
    ;

// Lookaround and backreferences are outside the portable subset.
bool uses_unportable_syntax(std::string_view pattern) {
  for (std::size_t i = 0; i + 1 < pattern.size(); ++i) {
    if (pattern[i] == '\\') {
      if (pattern[i + 1] >= '1' && pattern[i + 1] <= '9') return true;
      ++i;
      continue;
    }
    if (pattern[i] == '(' && pattern[i + 1] == '?' && i + 2 < pattern.size() && pattern[i + 2] != ':')
      return true;
  }
  return false;
}

// Highest $n referenced by the effect, or -1.
int highest_group(std::string_view effect) {
  int highest = -1;
  for (std::size_t i = 0; i + 1 < effect.size(); ++i) {
    if (effect[i] != '$') continue;
    const char next = effect[i + 1];
    if (next >= '0' && next <= '9') highest = std::max(highest, next - '0');
    ++i;
  }
  return highest;
}

std::string instantiate(std::string_view effect, const std::cmatch* match, std::string_view author) {
  std::string out;
  for (std::size_t i = 0; i < effect.size(); ++i) {
    const char c = effect[i];
    if (c != '$' || i + 1 == effect.size()) {
      out.push_back(c);
      continue;
    }
    const char next = effect[i + 1];
    if (next >= '0' && next <= '9') {
      const auto group = static_cast<std::size_t>(next - '0');
      if (match && group < match->size()) out += (*match)[group].str();
      ++i;
    } else if (next == 'u') {
      out += author;
      ++i;
    } else if (next == '$') {
      out.push_back('$');
      ++i;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

RuleSet load_rules(std::string_view source) {
  std::vector<ChatRule> rules;
  std::string default_effect(kFallbackEffect);
  bool seen_rule_line = false;
  std::size_t line_no = 0;

  while (!source.empty()) {
    ++line_no;
    const auto nl = source.find('\n');
    std::string_view line = source.substr(0, nl);
    source = nl == std::string_view::npos ? std::string_view{} : source.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ChatbotError(ChatbotErrc::BadPattern, line_no, "expected pattern<TAB>effect");
    const std::string_view pattern = line.substr(0, tab);
    const std::string_view effect = line.substr(tab + 1);

    if (pattern == "DEFAULT") {
      if (seen_rule_line)
        throw ChatbotError(ChatbotErrc::BadPattern, line_no, "DEFAULT must be the first rule line");
      if (highest_group(effect) >= 0)
        throw ChatbotError(ChatbotErrc::BadEffect, line_no, "DEFAULT effect cannot use groups");
      default_effect = std::string(effect);
      seen_rule_line = true;
      continue;
    }
    seen_rule_line = true;

    if (pattern.empty()) throw ChatbotError(ChatbotErrc::BadPattern, line_no, "empty pattern");
    if (uses_unportable_syntax(pattern))
      throw ChatbotError(ChatbotErrc::BadPattern, line_no, "lookaround and backreferences are not supported");
    ChatRule rule;
    rule.pattern = std::string(pattern);
    rule.effect = std::string(effect);
    rule.priority = rules.size();
    try {
      rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ChatbotError(ChatbotErrc::BadPattern, line_no, std::string("bad pattern: ") + e.what());
    }
    rule.group_count = rule.compiled.mark_count();
    if (highest_group(effect) > static_cast<int>(rule.group_count))
      throw ChatbotError(ChatbotErrc::BadEffect, line_no, "effect references a missing group");
    rules.push_back(std::move(rule));
  }
  return RuleSet(std::move(rules), std::move(default_effect));
}

RuleSet load_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read rule file " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return load_rules(bytes.str());
}

std::string_view shipped_rules_source() noexcept { return kShippedSource; }

const RuleSet& shipped_rules() {
  static const RuleSet rules = load_rules(kShippedSource);
  return rules;
}

std::string respond(const RuleSet& rules, std::string_view input, std::string_view author) {
  const std::string_view subject = text::trim(input);
  for (const auto& rule : rules.rules()) {
    std::cmatch match;
    try {
      if (std::regex_match(subject.begin(), subject.end(), match, rule.compiled))
        return instantiate(rule.effect, &match, author);
    } catch (const std::regex_error& e) {
      spdlog::warn("rule {} gave up on input: {}", rule.priority, e.what());
    }
  }
  return instantiate(rules.default_effect(), nullptr, author);
}

}  // namespace t411::chatbot
