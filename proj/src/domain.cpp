#include "t411/domain.hpp"

#include <charconv>

#include <spdlog/spdlog.h>

#include "t411/text.hpp"

namespace t411 {

std::string_view to_string(Channel channel) noexcept {
  return channel == Channel::Mention ? "mention" : "direct_message";
}

std::optional<Channel> channel_from_string(std::string_view name) noexcept {
  if (name == "mention") return Channel::Mention;
  if (name == "direct_message") return Channel::DirectMessage;
  return std::nullopt;
}

bool is_well_formed_reply(const OutboundReply& reply) {
  if (text::scalar_count(reply.text) > kMaxReplyScalars) return false;
  if (reply.channel == Channel::Mention) {
    const std::string prefix = "@" + reply.recipient + " ";
    return reply.text.starts_with(prefix);
  }
  return true;
}

bool is_valid_handle(std::string_view handle) noexcept {
  if (handle.empty()) return false;
  for (char c : handle)
    if (text::is_space(c)) return false;
  return true;
}

std::string_view bare_handle(std::string_view handle) noexcept {
  if (!handle.empty() && handle.front() == '@') handle.remove_prefix(1);
  return handle;
}

std::string strip_base_mention(std::string_view input, std::string_view base_account) {
  auto tokens = text::split_ws(input);
  for (auto it = tokens.begin(); it != tokens.end(); ++it) {
    const std::string_view tok = *it;
    if (tok.size() == base_account.size() + 1 && tok.front() == '@' &&
        text::iequals_ascii(tok.substr(1), base_account)) {
      tokens.erase(it);
      return text::join(tokens);
    }
  }
  return std::string(text::trim(input));
}

ParsedCommand parse_command(std::string_view stripped_text) {
  ParsedCommand cmd;
  const std::string_view trimmed = text::trim(stripped_text);
  cmd.original = std::string(trimmed);
  if (trimmed.empty()) return cmd;

  std::size_t end = 0;
  while (end < trimmed.size() && !text::is_space(trimmed[end])) ++end;
  cmd.key = normalize_key(trimmed.substr(0, end));
  cmd.text = std::string(text::trim(trimmed.substr(end)));
  return cmd;
}

std::optional<std::string> normalize_key(std::string_view raw) {
  if (raw.empty() || raw.size() > kMaxKeyLength) return std::nullopt;
  std::string key = text::to_lower_ascii(raw);
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return std::nullopt;
  }
  return key;
}

std::string bound_inbound_text(std::string_view input, MessageId id) {
  const std::string_view cut = text::truncate_scalars(input, kMaxInboundScalars);
  if (cut.size() != input.size()) {
    spdlog::warn("message {} truncated from {} to {} scalars", id, text::scalar_count(input),
                 kMaxInboundScalars);
  }
  return std::string(cut);
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SSZ
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len, int& out) {
    const char* first = s.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
  };
  int y, mo, d, h, mi, sec;
  if (!field(0, 4, y) || !field(5, 2, mo) || !field(8, 2, d) || !field(11, 2, h) ||
      !field(14, 2, mi) || !field(17, 2, sec))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

}  // namespace t411
