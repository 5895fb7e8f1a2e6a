// Transport contract, run against the simulator as its reference model.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "t411/simulator.hpp"

namespace t411 {
namespace {

using namespace std::chrono_literals;
using sim::SimTransport;
using sim::SimWorld;
using transport::ApiFamily;
using transport::budget_tick;
using transport::BudgetLimits;
using transport::PollCursor;
using transport::RateBudget;
using transport::TransportErrc;
using transport::TransportError;

TransportErrc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TransportError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected TransportError";
  return TransportErrc::TransportUnavailable;
}

struct SimFixture : ::testing::Test {
  std::shared_ptr<SimWorld> world = std::make_shared<SimWorld>();
  SimTransport transport{world, "t411", BudgetLimits{1000, 900s}, BudgetLimits{3, 900s}};
};

TEST(BudgetTick, ResetsAfterWindow) {
  const Timestamp t0 = sim::kDefaultEpoch;
  RateBudget b{ApiFamily::Rest, 15, 900s, 15, t0};
  const auto after = budget_tick(b, t0 + 900s);
  EXPECT_EQ(after.used, 0u);
  EXPECT_EQ(after.window_start, t0 + 900s);
}

TEST(BudgetTick, NoOpMidWindow) {
  const Timestamp t0 = sim::kDefaultEpoch;
  RateBudget b{ApiFamily::Rest, 15, 900s, 3, t0};
  EXPECT_EQ(budget_tick(b, t0 + 899s), b);
}

TEST(BudgetMeter, ThirtyAcquisitionsOnFixedClockYieldFifteen) {
  const Timestamp t0 = sim::kDefaultEpoch;
  transport::BudgetMeter meter(ApiFamily::Rest, {15, 900s}, t0);
  int granted = 0;
  for (int i = 0; i < 30; ++i) granted += meter.try_acquire(t0) ? 1 : 0;
  EXPECT_EQ(granted, 15);
  const auto snap = meter.snapshot();
  EXPECT_LE(snap.used, snap.capacity);
  EXPECT_TRUE(meter.try_acquire(t0 + 900s));
}

TEST(BudgetMeter, RejectsNonPositiveLimits) {
  EXPECT_THROW(transport::BudgetMeter(ApiFamily::Rest, {0, 900s}, {}), std::invalid_argument);
  EXPECT_THROW(transport::BudgetMeter(ApiFamily::Rest, {1, 0s}, {}), std::invalid_argument);
}

TEST_F(SimFixture, PollReturnsMessagesAfterCursor) {
  for (int i = 0; i < 3; ++i) world->inject("abava", "m" + std::to_string(i + 1), Channel::Mention);
  // Oracle: filter the simulator's own log.
  std::vector<InboundMessage> expected;
  for (const auto& m : world->inbound(Channel::Mention))
    if (m.id > 1) expected.push_back(m);

  const auto res = transport.poll_new(Channel::Mention, {Channel::Mention, 1});
  EXPECT_EQ(res.messages, expected);
  ASSERT_EQ(res.messages.size(), 2u);
  EXPECT_EQ(res.messages[0].id, 2u);
  EXPECT_EQ(res.cursor.since_id, 3u);
}

TEST_F(SimFixture, PollOnEmptyStoreKeepsCursor) {
  const auto res = transport.poll_new(Channel::Mention, {Channel::Mention, 0});
  EXPECT_TRUE(res.messages.empty());
  EXPECT_EQ(res.cursor.since_id, 0u);
}

TEST(SimTransport, PollWithExhaustedBudgetIsRateLimited) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{1, 900s});
  t.poll_new(Channel::Mention, {});
  EXPECT_EQ(t.rest_budget().used, t.rest_budget().capacity);
  EXPECT_EQ(code_of([&] { t.poll_new(Channel::Mention, {}); }), TransportErrc::RateLimited);
}

TEST_F(SimFixture, PollConsumesOneUnitPerCall) {
  transport.poll_new(Channel::Mention, {});
  transport.poll_new(Channel::DirectMessage, {Channel::DirectMessage, 0});
  EXPECT_EQ(transport.rest_budget().used, 2u);
  EXPECT_EQ(transport.streaming_budget().used, 0u);
}

TEST_F(SimFixture, UnavailableEndpointLeavesCursorToCaller) {
  world->set_available(false);
  EXPECT_EQ(code_of([&] { transport.poll_new(Channel::Mention, {}); }),
            TransportErrc::TransportUnavailable);
}

TEST_F(SimFixture, InjectOnDirectMessageIsInvisibleToMentionPoll) {
  world->inject("abava", "w msk", Channel::DirectMessage);
  EXPECT_TRUE(transport.poll_new(Channel::Mention, {}).messages.empty());
  EXPECT_EQ(transport.poll_new(Channel::DirectMessage, {Channel::DirectMessage, 0}).messages.size(), 1u);
}

TEST_F(SimFixture, StreamYieldsInjectedMessage) {
  auto stream = transport.open_stream();
  for (int i = 0; i < 6; ++i) world->inject("x", "pad", Channel::DirectMessage);
  const MessageId id = world->inject("abava", "@t411 w msk", Channel::Mention);
  ASSERT_EQ(id, 7u);
  std::optional<InboundMessage> last;
  for (int i = 0; i < 7; ++i) last = stream->next(1s);
  ASSERT_TRUE(last);
  EXPECT_EQ(last->id, 7u);
  EXPECT_EQ(last->text, "@t411 w msk");
  EXPECT_EQ(transport.streaming_budget().used, 1u);
  EXPECT_EQ(transport.rest_budget().used, 0u);
}

TEST_F(SimFixture, SecondOpenIsAlreadyStreaming) {
  auto stream = transport.open_stream();
  EXPECT_EQ(code_of([&] { transport.open_stream(); }), TransportErrc::AlreadyStreaming);
  EXPECT_EQ(transport.streaming_budget().used, 1u);
  stream.reset();
  EXPECT_NO_THROW(transport.open_stream());
}

TEST(SimTransport, OpenWithExhaustedStreamingBudgetButFullRestIsRateLimited) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{15, 900s}, BudgetLimits{1, 900s});
  t.open_stream()->close();
  EXPECT_EQ(t.rest_budget().used, 0u);
  EXPECT_EQ(code_of([&] { t.open_stream(); }), TransportErrc::RateLimited);
  // A failed open leaves the slot free for a later attempt.
  world->advance_clock(900s);
  EXPECT_NO_THROW(t.open_stream());
}

TEST_F(SimFixture, PostMentionReplyIsReadBack) {
  const OutboundReply reply{"abava", Channel::Mention, "@abava hello", 3};
  const MessageId id = transport.post_reply(reply);
  const auto outbox = world->read_outbox();
  ASSERT_EQ(outbox.size(), 1u);
  EXPECT_EQ(outbox[0].id, id);
  EXPECT_EQ(outbox[0].reply, reply);
}

TEST(SimTransport, PostWithExhaustedBudgetLeavesOutboxUnchanged) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{1, 900s});
  t.post_reply({"abava", Channel::Mention, "@abava one", 1});
  EXPECT_EQ(code_of([&] { t.post_reply({"abava", Channel::Mention, "@abava two", 1}); }),
            TransportErrc::RateLimited);
  EXPECT_EQ(world->read_outbox().size(), 1u);
}

TEST_F(SimFixture, DirectMessageReplyOnlyInDirectOutbox) {
  transport.post_reply({"abava", Channel::DirectMessage, "private", 1});
  EXPECT_EQ(world->read_outbox(Channel::DirectMessage).size(), 1u);
  EXPECT_TRUE(world->read_outbox(Channel::Mention).empty());
}

TEST_F(SimFixture, PostRejectsMalformedReply) {
  EXPECT_THROW(transport.post_reply({"abava", Channel::Mention, "no prefix", 1}), std::invalid_argument);
  EXPECT_THROW(transport.post_reply({"abava", Channel::DirectMessage, std::string(141, 'x'), 1}),
               std::invalid_argument);
  EXPECT_EQ(transport.rest_budget().used, 0u);
}

TEST_F(SimFixture, PostIdsStrictlyIncrease) {
  MessageId last = 0;
  for (int i = 0; i < 20; ++i) {
    world->inject("a", "x", i % 2 ? Channel::Mention : Channel::DirectMessage);
    const MessageId id = transport.post_reply({"a", Channel::DirectMessage, "r", 1});
    EXPECT_GT(id, last);
    last = id;
  }
}

TEST(SimTransport, BudgetsAreIndependent) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{5, 900s}, BudgetLimits{3, 900s});
  for (int i = 0; i < 5; ++i) t.poll_new(Channel::Mention, {});
  EXPECT_EQ(t.rest_budget().used, 5u);
  EXPECT_EQ(t.streaming_budget().used, 0u);
  for (int i = 0; i < 3; ++i) t.open_stream()->close();
  EXPECT_EQ(t.rest_budget().used, 5u);
  EXPECT_EQ(t.streaming_budget().used, 3u);
}

TEST(SimTransport, PollCompletenessUnderRandomInterleavings) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    auto world = std::make_shared<SimWorld>();
    SimTransport t(world, "t411", BudgetLimits{100000, 900s});
    std::map<Channel, PollCursor> cursors{{Channel::Mention, {Channel::Mention, 0}},
                                          {Channel::DirectMessage, {Channel::DirectMessage, 0}}};
    // Start from a non-zero since_id on mentions.
    const MessageId initial = 1 + rng() % 3;
    for (MessageId i = 0; i < initial; ++i) world->inject("pre", "x", Channel::Mention);
    cursors[Channel::Mention].since_id = initial;

    std::multiset<MessageId> returned;
    std::set<MessageId> injected;
    for (int step = 0; step < 200; ++step) {
      const Channel ch = rng() % 2 ? Channel::Mention : Channel::DirectMessage;
      if (rng() % 3) {
        injected.insert(world->inject("u", "t", ch));
      } else {
        auto res = t.poll_new(ch, cursors[ch]);
        EXPECT_GE(res.cursor.since_id, cursors[ch].since_id);
        for (const auto& m : res.messages) returned.insert(m.id);
        cursors[ch] = res.cursor;
      }
    }
    for (const Channel ch : {Channel::Mention, Channel::DirectMessage})
      for (const auto& m : t.poll_new(ch, cursors[ch]).messages) returned.insert(m.id);
    EXPECT_EQ(std::set<MessageId>(returned.begin(), returned.end()), injected);
    EXPECT_EQ(returned.size(), injected.size());
  }
}

TEST(SimTransport, StreamAndPollDeliverTheSameMessages) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{1000, 900s});
  auto stream = t.open_stream();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i)
    world->inject("u" + std::to_string(i % 7), "text " + std::to_string(i),
                  rng() % 2 ? Channel::Mention : Channel::DirectMessage);

  std::vector<InboundMessage> streamed;
  while (auto m = stream->next(100ms)) streamed.push_back(*m);
  std::vector<InboundMessage> polled;
  for (const Channel ch : {Channel::Mention, Channel::DirectMessage}) {
    auto res = t.poll_new(ch, {ch, 0});
    polled.insert(polled.end(), res.messages.begin(), res.messages.end());
  }
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  EXPECT_TRUE(std::is_sorted(streamed.begin(), streamed.end(), by_id));
  std::sort(polled.begin(), polled.end(), by_id);
  EXPECT_EQ(streamed, polled);
}

TEST(SimTransport, ConcurrentInjectWhilePolling) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{100000, 900s});
  std::thread producer([&] {
    for (int i = 0; i < 500; ++i) world->inject("u", "t", Channel::Mention);
  });
  std::set<MessageId> seen;
  PollCursor cursor{Channel::Mention, 0};
  while (seen.size() < 500) {
    auto res = t.poll_new(Channel::Mention, cursor);
    for (const auto& m : res.messages) EXPECT_TRUE(seen.insert(m.id).second);
    cursor = res.cursor;
  }
  producer.join();
  EXPECT_EQ(seen.size(), 500u);
}

TEST(SimTransport, LongInboundTextIsCappedAtIngestion) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411");
  world->inject("@abava", std::string(1500, 'a'), Channel::Mention);
  const auto res = t.poll_new(Channel::Mention, {});
  ASSERT_EQ(res.messages.size(), 1u);
  EXPECT_EQ(res.messages[0].text.size(), kMaxInboundScalars);
  EXPECT_EQ(res.messages[0].author, "abava");
}

// SimWorld operations

TEST(SimWorld, IdsStartAtOneAndIncrease) {
  SimWorld world;
  EXPECT_EQ(world.inject("a", "x", Channel::Mention), 1u);
  EXPECT_EQ(world.inject("a", "y", Channel::DirectMessage), 2u);
  EXPECT_THROW(world.inject("", "x", Channel::Mention), std::invalid_argument);
}

TEST(SimWorld, ClockAdvancesAdditively) {
  SimWorld world;
  const Timestamp t0 = world.now();
  EXPECT_EQ(world.advance_clock(0s), t0);
  world.advance_clock(10s);
  EXPECT_EQ(world.advance_clock(5s), t0 + 15s);
  EXPECT_THROW(world.advance_clock(-1s), std::invalid_argument);
}

TEST(SimWorld, AdvancingAWindowRestoresRestBudget) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411", BudgetLimits{15, 900s});
  for (int i = 0; i < 15; ++i) t.poll_new(Channel::Mention, {});
  EXPECT_EQ(t.rest_remaining(), 0u);
  world->advance_clock(900s);
  EXPECT_EQ(t.rest_remaining(), 15u);
  EXPECT_EQ(t.rest_budget().used, 0u);
}

TEST(SimWorld, OutboxKeepsPostOrder) {
  auto world = std::make_shared<SimWorld>();
  SimTransport t(world, "t411");
  EXPECT_TRUE(world->read_outbox().empty());
  t.post_reply({"a", Channel::DirectMessage, "first", 1});
  t.post_reply({"b", Channel::DirectMessage, "second", 2});
  const auto outbox = world->read_outbox();
  ASSERT_EQ(outbox.size(), 2u);
  EXPECT_EQ(outbox[0].reply.text, "first");
  EXPECT_EQ(outbox[1].reply.text, "second");
}

TEST(SimWorld, ReplayedScriptIsByteIdentical) {
  auto run = [] {
    auto world = std::make_shared<SimWorld>();
    SimTransport t(world, "t411", BudgetLimits{4, 900s});
    std::mt19937_64 rng(99);
    for (int i = 0; i < 60; ++i) {
      switch (rng() % 4) {
        case 0: world->inject("u", "x", Channel::Mention); break;
        case 1: world->advance_clock(std::chrono::seconds(rng() % 400)); break;
        case 2:
          try {
            t.poll_new(Channel::Mention, {});
          } catch (const TransportError&) {
          }
          break;
        default:
          try {
            t.post_reply({"u", Channel::Mention, "@u r" + std::to_string(i), 1});
          } catch (const TransportError&) {
          }
      }
    }
    return world->read_outbox();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace t411
