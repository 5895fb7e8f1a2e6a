#include "t411/simulator.hpp"

#include <algorithm>
#include <stdexcept>

namespace t411::sim {

using transport::TransportErrc;
using transport::TransportError;

namespace {

class SimStream final : public transport::MessageStream {
 public:
  explicit SimStream(std::shared_ptr<BlockingQueue<InboundMessage>> queue)
      : queue_(std::move(queue)) {}
  ~SimStream() override { close(); }

  std::optional<InboundMessage> next(std::chrono::milliseconds timeout) override {
    return queue_->pop_for(timeout);
  }
  void close() override { queue_->close(); }
  bool is_open() const override { return !queue_->closed(); }

 private:
  std::shared_ptr<BlockingQueue<InboundMessage>> queue_;
};

}  // namespace

SimWorld::SimWorld(Timestamp start) : clock_(start) {}

MessageId SimWorld::inject(std::string_view author, std::string_view text, Channel channel) {
  if (!is_valid_handle(bare_handle(author))) throw std::invalid_argument("inject: bad author");
  std::lock_guard lock(mutex_);
  InboundMessage msg{next_id_++, std::string(bare_handle(author)), std::string(text), channel,
                     clock_};
  (channel == Channel::Mention ? mention_log_ : dm_log_).push_back(msg);

  std::erase_if(subscribers_, [&](const auto& weak) {
    auto queue = weak.lock();
    return !queue || !queue->try_push(msg);
  });
  return msg.id;
}

Timestamp SimWorld::advance_clock(std::chrono::seconds by) {
  if (by.count() < 0) throw std::invalid_argument("advance_clock: negative step");
  std::lock_guard lock(mutex_);
  clock_ += by;
  return clock_;
}

Timestamp SimWorld::now() const {
  std::lock_guard lock(mutex_);
  return clock_;
}

std::vector<PostedReply> SimWorld::read_outbox() const {
  std::lock_guard lock(mutex_);
  return outbox_;
}

std::vector<PostedReply> SimWorld::read_outbox(Channel channel) const {
  std::lock_guard lock(mutex_);
  std::vector<PostedReply> out;
  std::copy_if(outbox_.begin(), outbox_.end(), std::back_inserter(out),
               [&](const PostedReply& p) { return p.reply.channel == channel; });
  return out;
}

std::vector<InboundMessage> SimWorld::inbound(Channel channel) const {
  std::lock_guard lock(mutex_);
  return channel == Channel::Mention ? mention_log_ : dm_log_;
}

void SimWorld::set_available(bool available) {
  std::lock_guard lock(mutex_);
  available_ = available;
}

bool SimWorld::available() const {
  std::lock_guard lock(mutex_);
  return available_;
}

std::vector<InboundMessage> SimWorld::messages_since(Channel channel, MessageId since_id) const {
  std::lock_guard lock(mutex_);
  if (!available_) throw TransportError(TransportErrc::TransportUnavailable, "simulator offline");
  const auto& log = channel == Channel::Mention ? mention_log_ : dm_log_;
  auto first = std::upper_bound(log.begin(), log.end(), since_id,
                                [](MessageId id, const InboundMessage& m) { return id < m.id; });
  return {first, log.end()};
}

MessageId SimWorld::publish(const OutboundReply& reply) {
  std::lock_guard lock(mutex_);
  if (!available_) throw TransportError(TransportErrc::TransportUnavailable, "simulator offline");
  const MessageId id = next_id_++;
  outbox_.push_back(PostedReply{id, reply, clock_});
  return id;
}

std::shared_ptr<BlockingQueue<InboundMessage>> SimWorld::subscribe() {
  std::lock_guard lock(mutex_);
  if (!available_) throw TransportError(TransportErrc::TransportUnavailable, "simulator offline");
  auto queue = std::make_shared<BlockingQueue<InboundMessage>>();
  subscribers_.push_back(queue);
  return queue;
}

SimTransport::SimTransport(std::shared_ptr<SimWorld> world, std::string base_account,
                           transport::BudgetLimits rest, transport::BudgetLimits streaming)
    : Transport({"simulated", std::move(base_account)}, rest, streaming, world->now()),
      world_(std::move(world)) {}

Timestamp SimTransport::now() const { return world_->now(); }

std::vector<InboundMessage> SimTransport::fetch(Channel channel, MessageId since_id) {
  return world_->messages_since(channel, since_id);
}

std::unique_ptr<transport::MessageStream> SimTransport::connect_stream() {
  return std::make_unique<SimStream>(world_->subscribe());
}

MessageId SimTransport::publish(const OutboundReply& reply) { return world_->publish(reply); }

}  // namespace t411::sim
