#include "t411/message_bus.hpp"

namespace t411::pipeline {

MessageBus::MessageBus(std::size_t capacity, std::size_t seen_capacity)
    : capacity_(capacity == 0 ? 1 : capacity), seen_capacity_(seen_capacity == 0 ? 1 : seen_capacity) {}

MessageBus::Offer MessageBus::offer(const InboundMessage& msg) {
  {
    std::lock_guard lock(mutex_);
    auto& st = state(msg.channel);
    if (st.seen.ids.contains(msg.id) || st.pending.contains(msg.id)) return Offer::Duplicate;
    if (queue_.size() >= capacity_) return Offer::Full;
    queue_.push_back(msg);
    st.pending.insert(msg.id);
  }
  ready_.notify_one();
  return Offer::Enqueued;
}

void MessageBus::push_unchecked(const InboundMessage& msg) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(msg);
    state(msg.channel).pending.insert(msg.id);
  }
  ready_.notify_one();
}

std::optional<InboundMessage> MessageBus::pop_locked() {
  if (queue_.empty()) return std::nullopt;
  InboundMessage msg = std::move(queue_.front());
  queue_.pop_front();
  return msg;
}

std::optional<InboundMessage> MessageBus::take() {
  std::lock_guard lock(mutex_);
  return pop_locked();
}

std::optional<InboundMessage> MessageBus::take_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  const auto generation = interrupts_;
  ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || interrupts_ != generation; });
  return pop_locked();
}

bool MessageBus::mark_seen(Channel channel, MessageId id) {
  std::lock_guard lock(mutex_);
  auto& st = state(channel);
  if (const auto it = st.pending.find(id); it != st.pending.end()) st.pending.erase(it);
  if (st.seen.ids.contains(id)) return false;
  remember_locked(st, id);
  return true;
}

void MessageBus::remember_locked(ChannelState& st, MessageId id) {
  st.seen.ids.insert(id);
  st.seen.order.push_back(id);
  while (st.seen.order.size() > seen_capacity_) {
    st.seen.ids.erase(st.seen.order.front());
    st.seen.order.pop_front();
  }
}

bool MessageBus::is_seen(Channel channel, MessageId id) const {
  std::lock_guard lock(mutex_);
  return state(channel).seen.ids.contains(id);
}

std::optional<MessageId> MessageBus::lowest_pending(Channel channel) const {
  std::lock_guard lock(mutex_);
  const auto& pending = state(channel).pending;
  if (pending.empty()) return std::nullopt;
  return *pending.begin();
}

std::vector<MessageId> MessageBus::seen_ids(Channel channel) const {
  std::lock_guard lock(mutex_);
  const auto& order = state(channel).seen.order;
  return {order.begin(), order.end()};
}

void MessageBus::restore_seen(Channel channel, const std::vector<MessageId>& ids) {
  std::lock_guard lock(mutex_);
  auto& st = state(channel);
  for (const MessageId id : ids)
    if (!st.seen.ids.contains(id)) remember_locked(st, id);
}

std::size_t MessageBus::depth() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

void MessageBus::interrupt() {
  {
    std::lock_guard lock(mutex_);
    ++interrupts_;
  }
  ready_.notify_all();
}

}  // namespace t411::pipeline
