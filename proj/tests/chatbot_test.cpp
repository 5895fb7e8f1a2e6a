#include <gtest/gtest.h>

#include "t411/chatbot.hpp"

namespace t411::chatbot {
namespace {

ChatbotError load_error(std::string_view source) {
  try {
    load_rules(source);
  } catch (const ChatbotError& e) {
    return e;
  }
  ADD_FAILURE() << "rules loaded";
  return ChatbotError(ChatbotErrc::BadPattern, 0, "");
}

TEST(ShippedRules, HowAreYou) {
  EXPECT_EQ(respond(shipped_rules(), "how are you?", "abava"), "Let me see, just a minute please.");
  EXPECT_EQ(respond(shipped_rules(), "How Are You", "abava"), "Let me see, just a minute please.");
}

TEST(ShippedRules, GroupAndAuthorSubstitution) {
  EXPECT_EQ(respond(shipped_rules(), "my name is Ada", "x"), "Hello Ada");
  EXPECT_EQ(respond(shipped_rules(), "hello!", "bob"), "Hello bob!");
}

TEST(ShippedRules, UnmatchedTextGetsDefault) {
  const std::string out = respond(shipped_rules(), "zzz qqq", "bob");
  EXPECT_EQ(out, shipped_rules().default_effect());
  EXPECT_NE(out, std::string(kFallbackEffect));
}

TEST(ShippedRules, SourceIsEmbedded) {
  EXPECT_NE(shipped_rules_source().find("how are you"), std::string_view::npos);
  EXPECT_GE(shipped_rules().size(), 5u);
}

TEST(Rules, PatternMustMatchWholeText) {
  const auto rules = load_rules("abc\tyes\n");
  EXPECT_EQ(respond(rules, "abc", "u"), "yes");
  EXPECT_EQ(respond(rules, "  abc  ", "u"), "yes");
  EXPECT_EQ(respond(rules, "abcd", "u"), kFallbackEffect);
  EXPECT_EQ(respond(rules, "xabc", "u"), kFallbackEffect);
}

TEST(Rules, FirstMatchWinsSoOrderMatters) {
  const auto a = load_rules("hi.*\tfirst\nhi there\tsecond\n");
  const auto b = load_rules("hi there\tsecond\nhi.*\tfirst\n");
  EXPECT_EQ(respond(a, "hi there", "u"), "first");
  EXPECT_EQ(respond(b, "hi there", "u"), "second");
}

TEST(Rules, EffectEscapes) {
  const auto rules = load_rules("(\\w+) costs (\\d+)\t$1 is $$$2 for $u; whole: $0\n");
  EXPECT_EQ(respond(rules, "tea costs 3", "ann"), "tea is $3 for ann; whole: tea costs 3");
}

TEST(Rules, CommentsBlankLinesAndDefault) {
  const auto rules = load_rules("# comment\n\nDEFAULT\tnope\r\nping\tpong\r\n");
  EXPECT_EQ(rules.size(), 1u);
  EXPECT_EQ(respond(rules, "ping", "u"), "pong");
  EXPECT_EQ(respond(rules, "pang", "u"), "nope");
  EXPECT_EQ(respond(load_rules(""), "x", "u"), kFallbackEffect);
}

TEST(Rules, ErrorsNameTheLine) {
  auto e = load_error("ok\tfine\n(unclosed\tx\n");
  EXPECT_EQ(e.code(), ChatbotErrc::BadPattern);
  EXPECT_EQ(e.line(), 2u);
  EXPECT_NE(std::string(e.what()).find("rule line 2"), std::string::npos);

  e = load_error("a(b)\t$2\n");
  EXPECT_EQ(e.code(), ChatbotErrc::BadEffect);
  EXPECT_EQ(e.line(), 1u);

  EXPECT_EQ(load_error("# c\nno tab here\n").line(), 2u);
  EXPECT_EQ(load_error("x(?=y)\tz\n").code(), ChatbotErrc::BadPattern);
  EXPECT_EQ(load_error("(a)\\1\tz\n").code(), ChatbotErrc::BadPattern);
  EXPECT_EQ(load_error("a\tb\nDEFAULT\tc\n").line(), 2u);
  EXPECT_EQ(load_error("DEFAULT\t$1\n").code(), ChatbotErrc::BadEffect);
}

TEST(Rules, NonCapturingGroupsAreAllowed) {
  const auto rules = load_rules("(?:a|b)+\tab\n");
  EXPECT_EQ(respond(rules, "abba", "u"), "ab");
}

TEST(Rules, ResponsesAreDeterministic) {
  const auto rules = shipped_rules();
  for (const char* text : {"hi", "thanks a lot", "what can you do?", "???", ""}) {
    const std::string first = respond(rules, text, "u");
    for (int i = 0; i < 5; ++i) EXPECT_EQ(respond(rules, text, "u"), first);
  }
}

TEST(Rules, LoadFromFile) {
  EXPECT_EQ(load_rules_file(T411_DATA_DIR "/chatbot.rules").size(), shipped_rules().size());
  EXPECT_THROW(load_rules_file("/nonexistent/rules"), std::runtime_error);
}

}  // namespace
}  // namespace t411::chatbot
