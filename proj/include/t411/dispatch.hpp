#pragma once

// Webhook contract: every service is called with
//   GET <webhook>?t=<original text>&u=<author>
// and the trimmed response body becomes the reply.

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <variant>

#include "t411/domain.hpp"

namespace t411::dispatch {

struct Success {
  std::string body;
  bool operator==(const Success&) const = default;
};
struct Timeout {
  bool operator==(const Timeout&) const = default;
};
struct HttpError {
  int status = 0;
  bool operator==(const HttpError&) const = default;
};
struct Unreachable {
  bool operator==(const Unreachable&) const = default;
};

using WebhookOutcome = std::variant<Success, Timeout, HttpError, Unreachable>;

std::string describe(const WebhookOutcome& outcome);

inline constexpr std::chrono::seconds kDefaultWebhookTimeout{10};
inline constexpr std::string_view kUnavailableText = "service temporarily unavailable";

struct WebhookCall {
  std::string url;
  std::string t_param;
  std::string u_param;
  std::chrono::seconds timeout = kDefaultWebhookTimeout;
  std::optional<WebhookOutcome> outcome;
};

// RFC 3986 unreserved bytes pass through; every other byte becomes %HH
// (uppercase). Space is "%20", never "+".
std::string percent_encode(std::string_view s);

// t carries the full original text, key included.
WebhookCall build_call(const ServiceRegistration& reg, const ParsedCommand& cmd,
                       std::string_view author,
                       std::chrono::seconds timeout = kDefaultWebhookTimeout);

// UTF-8 sanitized, trimmed, CR/LF runs collapsed to one space.
std::string normalize_body(std::string_view raw);

// Performs the GET. Never throws.
WebhookOutcome execute(const WebhookCall& call);

// Timeout, 5xx and Unreachable are retried once; 4xx never.
bool is_retryable(const WebhookOutcome& outcome) noexcept;

// nullopt for an empty body. Failures become the "temporarily unavailable"
// notice. Long bodies are cut to exactly kMaxReplyScalars ending in "…".
std::optional<OutboundReply> compose_reply(const WebhookOutcome& outcome, std::string_view author,
                                           Channel channel, MessageId in_reply_to);

using Executor = std::function<WebhookOutcome(const WebhookCall&)>;

// Applies the retry policy and caps concurrent webhook calls.
class Dispatcher {
 public:
  static constexpr std::ptrdiff_t kMaxParallelism = 64;

  explicit Dispatcher(Executor executor = execute, std::size_t parallelism = 4);

  // Runs the call (at most two attempts) and stores the final outcome in it.
  const WebhookOutcome& run(WebhookCall& call);

  std::size_t parallelism() const noexcept { return parallelism_; }
  // Number of HTTP attempts issued so far.
  std::uint64_t attempts() const noexcept { return attempts_.load(); }

 private:
  WebhookOutcome attempt(const WebhookCall& call);

  Executor executor_;
  std::size_t parallelism_;
  std::counting_semaphore<kMaxParallelism> slots_;
  std::atomic<std::uint64_t> attempts_{0};
};

}  // namespace t411::dispatch
