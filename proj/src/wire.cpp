#include "t411/wire.hpp"

namespace t411::wire {

using nlohmann::json;

json message_to_json(const InboundMessage& msg, bool with_channel) {
  json j{{"id", msg.id},
         {"author", msg.author},
         {"text", msg.text},
         {"created_at", format_timestamp(msg.received_at)}};
  if (with_channel) j["channel"] = to_string(msg.channel);
  return j;
}

std::optional<InboundMessage> message_from_json(const json& j, std::optional<Channel> channel) {
  if (!j.is_object()) return std::nullopt;
  const auto id = j.find("id");
  const auto author = j.find("author");
  const auto text = j.find("text");
  if (id == j.end() || !id->is_number_unsigned() || author == j.end() || !author->is_string() ||
      text == j.end() || !text->is_string())
    return std::nullopt;

  InboundMessage msg;
  msg.id = id->get<MessageId>();
  msg.author = author->get<std::string>();
  msg.text = text->get<std::string>();
  if (const auto created = j.find("created_at"); created != j.end() && created->is_string()) {
    const auto ts = parse_timestamp(created->get<std::string>());
    if (!ts) return std::nullopt;
    msg.received_at = *ts;
  }
  if (channel) {
    msg.channel = *channel;
  } else {
    const auto field = j.find("channel");
    if (field == j.end() || !field->is_string()) return std::nullopt;
    const auto parsed = channel_from_string(field->get<std::string>());
    if (!parsed) return std::nullopt;
    msg.channel = *parsed;
  }
  return msg;
}

std::string messages_envelope(const std::vector<InboundMessage>& messages) {
  json list = json::array();
  for (const auto& m : messages) list.push_back(message_to_json(m, false));
  return json{{"messages", std::move(list)}}.dump();
}

json reply_request(const OutboundReply& reply) {
  if (reply.channel == Channel::Mention)
    return json{{"text", reply.text}, {"in_reply_to", reply.in_reply_to}};
  return json{{"recipient", reply.recipient}, {"text", reply.text}};
}

std::optional<OutboundReply> reply_from_request(const json& body, Channel channel) {
  if (!body.is_object()) return std::nullopt;
  const auto text = body.find("text");
  if (text == body.end() || !text->is_string()) return std::nullopt;
  OutboundReply reply;
  reply.channel = channel;
  reply.text = text->get<std::string>();
  if (channel == Channel::Mention) {
    const auto to = body.find("in_reply_to");
    if (to == body.end() || !to->is_number_unsigned()) return std::nullopt;
    reply.in_reply_to = to->get<MessageId>();
    // The status text itself names the recipient: "@handle ...".
    if (reply.text.starts_with('@')) {
      const auto end = reply.text.find(' ');
      reply.recipient = reply.text.substr(1, end == std::string::npos ? end : end - 1);
    }
  } else {
    const auto to = body.find("recipient");
    if (to == body.end() || !to->is_string()) return std::nullopt;
    reply.recipient = to->get<std::string>();
  }
  return reply;
}

std::string_view poll_path(Channel channel) noexcept {
  return channel == Channel::Mention ? "/mentions" : "/direct_messages";
}

std::string_view post_path(Channel channel) noexcept {
  return channel == Channel::Mention ? "/statuses" : "/direct_messages";
}

}  // namespace t411::wire
