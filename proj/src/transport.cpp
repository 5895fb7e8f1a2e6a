#include "t411/transport.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace t411::transport {

namespace {

// Clears the endpoint's single-stream flag when the handle goes away.
class GuardedStream final : public MessageStream {
 public:
  GuardedStream(std::unique_ptr<MessageStream> inner, std::shared_ptr<std::atomic<bool>> flag)
      : inner_(std::move(inner)), flag_(std::move(flag)) {}
  ~GuardedStream() override { close(); }

  std::optional<InboundMessage> next(std::chrono::milliseconds timeout) override {
    while (true) {
      auto msg = inner_->next(timeout);
      if (!msg) return std::nullopt;
      if (auto admitted = admit_message(std::move(*msg))) return admitted;
    }
  }

  void close() override {
    inner_->close();
    if (!released_.exchange(true)) flag_->store(false);
  }

  bool is_open() const override { return inner_->is_open(); }

 private:
  std::unique_ptr<MessageStream> inner_;
  std::shared_ptr<std::atomic<bool>> flag_;
  std::atomic<bool> released_{false};
};

}  // namespace

RateBudget budget_tick(RateBudget budget, Timestamp now) {
  if (now - budget.window_start >= budget.window) {
    budget.used = 0;
    budget.window_start = now;
  }
  return budget;
}

BudgetMeter::BudgetMeter(ApiFamily family, BudgetLimits limits, Timestamp start) {
  if (limits.capacity == 0 || limits.window.count() <= 0)
    throw std::invalid_argument("rate budget needs positive capacity and window");
  budget_ = RateBudget{family, limits.capacity, limits.window, 0, start};
}

bool BudgetMeter::try_acquire(Timestamp now) {
  std::lock_guard lock(mutex_);
  budget_ = budget_tick(budget_, now);
  if (budget_.used >= budget_.capacity) return false;
  ++budget_.used;
  return true;
}

std::uint32_t BudgetMeter::remaining(Timestamp now) {
  std::lock_guard lock(mutex_);
  budget_ = budget_tick(budget_, now);
  return budget_.capacity - budget_.used;
}

RateBudget BudgetMeter::snapshot() const {
  std::lock_guard lock(mutex_);
  return budget_;
}

std::string_view to_string(TransportErrc code) noexcept {
  switch (code) {
    case TransportErrc::RateLimited: return "RateLimited";
    case TransportErrc::TransportUnavailable: return "TransportUnavailable";
    case TransportErrc::AlreadyStreaming: return "AlreadyStreaming";
  }
  return "unknown";
}

std::optional<InboundMessage> admit_message(InboundMessage msg) {
  msg.author = std::string(bare_handle(msg.author));
  if (msg.id == 0 || !is_valid_handle(msg.author)) {
    spdlog::warn("dropping malformed inbound message id={} author='{}'", msg.id, msg.author);
    return std::nullopt;
  }
  msg.text = bound_inbound_text(msg.text, msg.id);
  return msg;
}

Transport::Transport(TransportEndpoint endpoint, BudgetLimits rest, BudgetLimits streaming,
                     Timestamp start)
    : endpoint_(std::move(endpoint)),
      rest_(ApiFamily::Rest, rest, start),
      streaming_(ApiFamily::Streaming, streaming, start),
      streaming_open_(std::make_shared<std::atomic<bool>>(false)) {
  if (!is_valid_handle(endpoint_.base_account))
    throw std::invalid_argument("base account must be a non-empty handle");
}

Transport::~Transport() = default;

PollResult Transport::poll_new(Channel channel, PollCursor cursor) {
  if (!rest_.try_acquire(now()))
    throw TransportError(TransportErrc::RateLimited, "REST budget exhausted");

  std::vector<InboundMessage> fetched = fetch(channel, cursor.since_id);
  PollResult result{{}, cursor};
  result.messages.reserve(fetched.size());
  for (auto& msg : fetched) {
    if (msg.id <= cursor.since_id || msg.channel != channel) continue;
    if (auto admitted = admit_message(std::move(msg))) result.messages.push_back(std::move(*admitted));
  }
  std::sort(result.messages.begin(), result.messages.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  result.messages.erase(std::unique(result.messages.begin(), result.messages.end(),
                                    [](const auto& a, const auto& b) { return a.id == b.id; }),
                        result.messages.end());
  if (!result.messages.empty()) result.cursor.since_id = result.messages.back().id;
  return result;
}

std::unique_ptr<MessageStream> Transport::open_stream() {
  if (streaming_open_->exchange(true))
    throw TransportError(TransportErrc::AlreadyStreaming, "a stream is already open");
  try {
    if (!streaming_.try_acquire(now()))
      throw TransportError(TransportErrc::RateLimited, "streaming budget exhausted");
    return std::make_unique<GuardedStream>(connect_stream(), streaming_open_);
  } catch (...) {
    streaming_open_->store(false);
    throw;
  }
}

MessageId Transport::post_reply(const OutboundReply& reply) {
  if (!is_well_formed_reply(reply))
    throw std::invalid_argument("reply violates the prefix or length bound");
  if (!rest_.try_acquire(now()))
    throw TransportError(TransportErrc::RateLimited, "REST budget exhausted");
  return publish(reply);
}

RateBudget Transport::rest_budget() const { return rest_.snapshot(); }
RateBudget Transport::streaming_budget() const { return streaming_.snapshot(); }
std::uint32_t Transport::rest_remaining() { return rest_.remaining(now()); }

}  // namespace t411::transport
