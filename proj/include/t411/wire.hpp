#pragma once

// JSON shapes of the generic microblog API.
//
//   GET  {base}/mentions?since_id=N         {"messages":[{id,author,text,created_at}]}
//   GET  {base}/direct_messages?since_id=N  same envelope
//   POST {base}/statuses                    {"text":..,"in_reply_to":N} -> {"id":N}
//   POST {base}/direct_messages             {"recipient":..,"text":..}  -> {"id":N}
//   GET  {base}/stream                      NDJSON, message objects plus "channel"

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "t411/domain.hpp"

namespace t411::wire {

nlohmann::json message_to_json(const InboundMessage& msg, bool with_channel);

// `channel` is used when given; otherwise the object's "channel" field decides.
std::optional<InboundMessage> message_from_json(const nlohmann::json& j,
                                                std::optional<Channel> channel);

std::string messages_envelope(const std::vector<InboundMessage>& messages);

nlohmann::json reply_request(const OutboundReply& reply);

// Inverse of reply_request, for servers speaking the schema.
std::optional<OutboundReply> reply_from_request(const nlohmann::json& body, Channel channel);

std::string_view poll_path(Channel channel) noexcept;
std::string_view post_path(Channel channel) noexcept;

}  // namespace t411::wire
