#pragma once

// In-memory microblog world. One id space covers both inbound logs and the
// outbox; the clock only moves through advance_clock.

#include <memory>
#include <mutex>
#include <vector>

#include "t411/blocking_queue.hpp"
#include "t411/transport.hpp"

namespace t411::sim {

struct PostedReply {
  MessageId id = 0;
  OutboundReply reply;
  Timestamp posted_at{};

  bool operator==(const PostedReply&) const = default;
};

// 2015-09-01T12:00:00Z
inline constexpr Timestamp kDefaultEpoch{std::chrono::seconds{1441108800}};

class SimWorld {
 public:
  explicit SimWorld(Timestamp start = kDefaultEpoch);

  MessageId inject(std::string_view author, std::string_view text, Channel channel);
  Timestamp advance_clock(std::chrono::seconds by);
  Timestamp now() const;

  std::vector<PostedReply> read_outbox() const;
  std::vector<PostedReply> read_outbox(Channel channel) const;
  std::vector<InboundMessage> inbound(Channel channel) const;

  // Test hook: while unavailable every transport call fails.
  void set_available(bool available);
  bool available() const;

  // Transport side.
  std::vector<InboundMessage> messages_since(Channel channel, MessageId since_id) const;
  MessageId publish(const OutboundReply& reply);
  std::shared_ptr<BlockingQueue<InboundMessage>> subscribe();

 private:
  mutable std::mutex mutex_;
  MessageId next_id_ = 1;
  Timestamp clock_;
  bool available_ = true;
  std::vector<InboundMessage> mention_log_;
  std::vector<InboundMessage> dm_log_;
  std::vector<PostedReply> outbox_;
  std::vector<std::weak_ptr<BlockingQueue<InboundMessage>>> subscribers_;
};

class SimTransport final : public transport::Transport {
 public:
  SimTransport(std::shared_ptr<SimWorld> world, std::string base_account,
               transport::BudgetLimits rest = transport::kDefaultRestLimits,
               transport::BudgetLimits streaming = transport::kDefaultStreamingLimits);

  Timestamp now() const override;
  SimWorld& world() noexcept { return *world_; }

 protected:
  std::vector<InboundMessage> fetch(Channel channel, MessageId since_id) override;
  std::unique_ptr<transport::MessageStream> connect_stream() override;
  MessageId publish(const OutboundReply& reply) override;

 private:
  std::shared_ptr<SimWorld> world_;
};

}  // namespace t411::sim
