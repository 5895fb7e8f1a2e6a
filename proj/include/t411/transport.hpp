#pragma once

// The microblog platform as the gateway sees it: poll or stream inbound
// messages, post replies, and account for two independent rate budgets.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "t411/domain.hpp"

namespace t411::transport {

enum class ApiFamily { Rest, Streaming };

struct RateBudget {
  ApiFamily family = ApiFamily::Rest;
  std::uint32_t capacity = 15;
  std::chrono::seconds window{900};
  std::uint32_t used = 0;
  Timestamp window_start{};

  bool operator==(const RateBudget&) const = default;
};

struct BudgetLimits {
  std::uint32_t capacity;
  std::chrono::seconds window;
};

inline constexpr BudgetLimits kDefaultRestLimits{15, std::chrono::seconds{900}};
inline constexpr BudgetLimits kDefaultStreamingLimits{3, std::chrono::seconds{900}};

// Fixed window: once `window` has elapsed since window_start, used resets
// to 0 and the window restarts at `now`.
RateBudget budget_tick(RateBudget budget, Timestamp now);

// Thread-safe owner of one RateBudget.
class BudgetMeter {
 public:
  BudgetMeter(ApiFamily family, BudgetLimits limits, Timestamp start);

  // Ticks, then takes one unit if any is left.
  bool try_acquire(Timestamp now);
  std::uint32_t remaining(Timestamp now);
  RateBudget snapshot() const;

 private:
  mutable std::mutex mutex_;
  RateBudget budget_;
};

struct PollCursor {
  Channel channel = Channel::Mention;
  MessageId since_id = 0;

  bool operator==(const PollCursor&) const = default;
};

struct PollResult {
  std::vector<InboundMessage> messages;
  PollCursor cursor;
};

enum class TransportErrc { RateLimited, TransportUnavailable, AlreadyStreaming };

std::string_view to_string(TransportErrc code) noexcept;

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  TransportErrc code() const noexcept { return code_; }

 private:
  TransportErrc code_;
};

// A live subscription. Messages arrive in id order.
class MessageStream {
 public:
  virtual ~MessageStream() = default;

  // Waits up to `timeout`. nullopt on timeout, or once the stream has ended.
  virtual std::optional<InboundMessage> next(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
  virtual bool is_open() const = 0;
};

struct TransportEndpoint {
  std::string base_url;  // absolute http(s) URL or "simulated"
  std::string base_account;

  bool simulated() const noexcept { return base_url == "simulated"; }
};

// Budget accounting, cursor bookkeeping and message normalization live here;
// subclasses only move bytes. Safe for one polling and one streaming caller
// at the same time.
class Transport {
 public:
  virtual ~Transport();

  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  // One Rest unit per call. Returns messages with id > cursor.since_id in
  // ascending order; the cursor moves to the highest returned id.
  PollResult poll_new(Channel channel, PollCursor cursor);

  // One Streaming unit per open; delivered messages are free.
  std::unique_ptr<MessageStream> open_stream();

  // One Rest unit per call. Returns the id the endpoint assigned.
  MessageId post_reply(const OutboundReply& reply);

  RateBudget rest_budget() const;
  RateBudget streaming_budget() const;
  std::uint32_t rest_remaining();

  const TransportEndpoint& endpoint() const noexcept { return endpoint_; }

  virtual Timestamp now() const = 0;

 protected:
  Transport(TransportEndpoint endpoint, BudgetLimits rest, BudgetLimits streaming, Timestamp start);

  // Throw TransportError on failure.
  virtual std::vector<InboundMessage> fetch(Channel channel, MessageId since_id) = 0;
  virtual std::unique_ptr<MessageStream> connect_stream() = 0;
  virtual MessageId publish(const OutboundReply& reply) = 0;

 private:
  TransportEndpoint endpoint_;
  BudgetMeter rest_;
  BudgetMeter streaming_;
  std::shared_ptr<std::atomic<bool>> streaming_open_;
};

// Normalizes a message received from any endpoint: strips '@' from the
// author and applies the inbound length cap. nullopt if it is unusable.
std::optional<InboundMessage> admit_message(InboundMessage msg);

}  // namespace t411::transport
