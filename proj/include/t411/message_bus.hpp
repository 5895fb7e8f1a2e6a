#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

#include "t411/domain.hpp"

namespace t411::pipeline {

// Bounded FIFO between ingestion and processing, plus the per-channel
// record of processed ids. An id that is queued, being processed, or
// already seen is never enqueued again.
class MessageBus {
 public:
  static constexpr std::size_t kDefaultCapacity = 1024;
  static constexpr std::size_t kDefaultSeenCapacity = 10'000;

  enum class Offer { Enqueued, Duplicate, Full };

  explicit MessageBus(std::size_t capacity = kDefaultCapacity,
                      std::size_t seen_capacity = kDefaultSeenCapacity);

  Offer offer(const InboundMessage& msg);

  // Bypasses every check. Exists so tests can simulate a faulty bus.
  void push_unchecked(const InboundMessage& msg);

  std::optional<InboundMessage> take();
  std::optional<InboundMessage> take_for(std::chrono::milliseconds timeout);

  // Claims an id for processing. False if it was already seen.
  bool mark_seen(Channel channel, MessageId id);
  bool is_seen(Channel channel, MessageId id) const;

  // Lowest id queued or taken-but-unclaimed on the channel.
  std::optional<MessageId> lowest_pending(Channel channel) const;

  // Oldest first.
  std::vector<MessageId> seen_ids(Channel channel) const;
  void restore_seen(Channel channel, const std::vector<MessageId>& ids);

  std::size_t depth() const;
  std::size_t capacity() const noexcept { return capacity_; }

  // Wakes blocked consumers.
  void interrupt();

 private:
  struct Seen {
    std::unordered_set<MessageId> ids;
    std::deque<MessageId> order;
  };
  struct ChannelState {
    Seen seen;
    std::multiset<MessageId> pending;
  };

  ChannelState& state(Channel channel) { return channels_[channel == Channel::Mention ? 0 : 1]; }
  const ChannelState& state(Channel channel) const {
    return channels_[channel == Channel::Mention ? 0 : 1];
  }
  void remember_locked(ChannelState& st, MessageId id);
  std::optional<InboundMessage> pop_locked();

  const std::size_t capacity_;
  const std::size_t seen_capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<InboundMessage> queue_;
  ChannelState channels_[2];
  std::uint64_t interrupts_ = 0;
};

}  // namespace t411::pipeline
