#pragma once

// Core value types and the "Key Optional_Text" command grammar.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace t411 {

using MessageId = std::uint64_t;
using Timestamp = std::chrono::sys_seconds;

// Mentions are public, direct messages are private. There is no third kind.
enum class Channel { Mention, DirectMessage };

// Wire names: "mention" / "direct_message".
std::string_view to_string(Channel channel) noexcept;
std::optional<Channel> channel_from_string(std::string_view name) noexcept;

inline constexpr std::size_t kMaxInboundScalars = 1000;
inline constexpr std::size_t kMaxReplyScalars = 140;
inline constexpr std::size_t kMaxKeyLength = 16;

struct InboundMessage {
  MessageId id = 0;
  std::string author;  // stored without the leading '@'
  std::string text;
  Channel channel = Channel::Mention;
  Timestamp received_at{};

  bool operator==(const InboundMessage&) const = default;
};

struct ParsedCommand {
  std::optional<std::string> key;
  std::string text;
  std::string original;

  bool operator==(const ParsedCommand&) const = default;
};

struct ServiceRegistration {
  std::string key;
  std::string webhook;
  std::string owner;
  Timestamp registered_at{};

  bool operator==(const ServiceRegistration&) const = default;
};

// A composed reply. Mention replies start with "@recipient "; every reply
// is at most kMaxReplyScalars scalars (see dispatch::compose_reply).
struct OutboundReply {
  std::string recipient;
  Channel channel = Channel::Mention;
  std::string text;
  MessageId in_reply_to = 0;

  bool operator==(const OutboundReply&) const = default;
};

// Both OutboundReply invariants: mention prefix and the scalar bound.
bool is_well_formed_reply(const OutboundReply& reply);

// Non-empty and free of whitespace.
bool is_valid_handle(std::string_view handle) noexcept;

// Drops one leading '@'.
std::string_view bare_handle(std::string_view handle) noexcept;

// Removes the first whitespace-delimited token equal (ASCII case-insensitive)
// to "@"+base_account and rejoins the rest with single spaces. Without such
// a token the input is only trimmed.
std::string strip_base_mention(std::string_view text, std::string_view base_account);

// Splits "Key Optional_Text". The key is absent for blank input and for a
// first token that is not a valid key; `original` keeps the input's case.
ParsedCommand parse_command(std::string_view stripped_text);

// Lowercases ASCII letters; accepts iff the result matches [a-z0-9_]{1,16}.
std::optional<std::string> normalize_key(std::string_view raw);

// Applies the inbound length cap, logging when text is cut.
std::string bound_inbound_text(std::string_view text, MessageId id);

// RFC 3339 UTC with seconds precision: "2015-09-01T12:00:00Z".
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view s);

}  // namespace t411
