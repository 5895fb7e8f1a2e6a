#include "t411/dispatch.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "t411/text.hpp"
#include "t411/url.hpp"

namespace t411::dispatch {

namespace {

constexpr bool is_unreserved(unsigned char c) noexcept {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '.' || c == '_' || c == '~';
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string describe(const WebhookOutcome& outcome) {
  return std::visit(overloaded{
                        [](const Success& s) { return "Success(" + std::to_string(s.body.size()) + " bytes)"; },
                        [](const Timeout&) { return std::string("Timeout"); },
                        [](const HttpError& e) { return "HttpError(" + std::to_string(e.status) + ")"; },
                        [](const Unreachable&) { return std::string("Unreachable"); },
                    },
                    outcome);
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_unreserved(c)) {
      out.push_back(ch);
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
  }
  return out;
}

WebhookCall build_call(const ServiceRegistration& reg, const ParsedCommand& cmd,
                       std::string_view author, std::chrono::seconds timeout) {
  WebhookCall call;
  call.t_param = cmd.original;
  call.u_param = std::string(bare_handle(author));
  call.url = reg.webhook + "?t=" + percent_encode(call.t_param) + "&u=" + percent_encode(call.u_param);
  call.timeout = timeout;
  return call;
}

std::string normalize_body(std::string_view raw) {
  const std::string clean = text::sanitize_utf8(raw);
  std::string out;
  out.reserve(clean.size());
  bool in_break = false;
  for (const char c : clean) {
    if (c == '\r' || c == '\n') {
      in_break = true;
      continue;
    }
    if (in_break) out.push_back(' ');
    in_break = false;
    out.push_back(c);
  }
  return std::string(text::trim(out));
}

WebhookOutcome execute(const WebhookCall& call) {
  const auto url = parse_http_url(call.url);
  if (!url) return Unreachable{};
  try {
    httplib::Client client(url->origin());
    client.set_connection_timeout(call.timeout);
    client.set_read_timeout(call.timeout);
    client.set_write_timeout(call.timeout);
    client.set_follow_location(true);

    std::string target = url->path;
    if (url->has_query) target += "?" + url->query;
    const auto started = std::chrono::steady_clock::now();
    const auto res = client.Get(target);
    if (!res) {
      const auto err = res.error();
      const bool timed_out =
          err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && std::chrono::steady_clock::now() - started >= call.timeout);
      return timed_out ? WebhookOutcome{Timeout{}} : WebhookOutcome{Unreachable{}};
    }
    if (res->status < 200 || res->status > 299) return HttpError{res->status};
    return Success{normalize_body(res->body)};
  } catch (const std::exception& e) {
    spdlog::warn("webhook {}: {}", call.url, e.what());
    return Unreachable{};
  }
}

bool is_retryable(const WebhookOutcome& outcome) noexcept {
  if (const auto* err = std::get_if<HttpError>(&outcome)) return err->status >= 500;
  return !std::holds_alternative<Success>(outcome);
}

std::optional<OutboundReply> compose_reply(const WebhookOutcome& outcome, std::string_view author,
                                           Channel channel, MessageId in_reply_to) {
  const std::string recipient(bare_handle(author));
  std::string body;
  if (const auto* ok = std::get_if<Success>(&outcome)) {
    body = normalize_body(ok->body);
    if (body.empty()) return std::nullopt;
  } else {
    body = std::string(kUnavailableText);
  }

  const std::string prefix = channel == Channel::Mention ? "@" + recipient + " " : std::string{};
  const std::size_t prefix_len = text::scalar_count(prefix);
  if (prefix_len + 1 > kMaxReplyScalars) {
    spdlog::warn("handle '{}' too long for a reply", recipient);
    return std::nullopt;
  }
  if (prefix_len + text::scalar_count(body) > kMaxReplyScalars) {
    body = std::string(text::truncate_scalars(body, kMaxReplyScalars - prefix_len - 1));
    body += "…";
  }
  return OutboundReply{recipient, channel, prefix + body, in_reply_to};
}

Dispatcher::Dispatcher(Executor executor, std::size_t parallelism)
    : executor_(std::move(executor)),
      parallelism_(std::clamp<std::size_t>(parallelism, 1, kMaxParallelism)),
      slots_(static_cast<std::ptrdiff_t>(parallelism_)) {}

WebhookOutcome Dispatcher::attempt(const WebhookCall& call) {
  slots_.acquire();
  ++attempts_;
  WebhookOutcome outcome = Unreachable{};
  try {
    outcome = executor_(call);
  } catch (const std::exception& e) {
    spdlog::warn("webhook executor threw: {}", e.what());
  }
  slots_.release();
  return outcome;
}

const WebhookOutcome& Dispatcher::run(WebhookCall& call) {
  WebhookOutcome outcome = attempt(call);
  if (is_retryable(outcome)) {
    spdlog::info("webhook {} -> {}, retrying once", call.url, describe(outcome));
    outcome = attempt(call);
  }
  if (!std::holds_alternative<Success>(outcome))
    spdlog::warn("webhook {} failed: {}", call.url, describe(outcome));
  call.outcome = std::move(outcome);
  return *call.outcome;
}

}  // namespace t411::dispatch
