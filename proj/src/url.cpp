#include "t411/url.hpp"

#include <charconv>

#include "t411/text.hpp"

namespace t411 {

std::string HttpUrl::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

std::optional<HttpUrl> parse_http_url(std::string_view url) {
  HttpUrl out;
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  out.scheme = text::to_lower_ascii(url.substr(0, sep));
  if (out.scheme != "http" && out.scheme != "https") return std::nullopt;
  url.remove_prefix(sep + 3);

  const auto authority_end = url.find_first_of("/?#");
  std::string_view authority = url.substr(0, authority_end);
  url = authority_end == std::string_view::npos ? std::string_view{} : url.substr(authority_end);
  if (authority.find('@') != std::string_view::npos) return std::nullopt;

  out.port = out.scheme == "https" ? 443 : 80;
  std::string_view host = authority;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(1, close - 1);
    authority.remove_prefix(close + 1);
    if (!authority.empty() && authority.front() != ':') return std::nullopt;
  } else {
    const auto colon = authority.rfind(':');
    host = authority.substr(0, colon);
    authority = colon == std::string_view::npos ? std::string_view{} : authority.substr(colon);
  }
  if (!authority.empty()) {
    const std::string_view digits = authority.substr(1);
    int port = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || port <= 0 ||
        port > 65535)
      return std::nullopt;
    out.port = port;
  }
  if (host.empty()) return std::nullopt;
  for (char c : host)
    if (text::is_space(c) || c == '/' || c == '\\') return std::nullopt;
  out.host = std::string(host);

  const auto fragment = url.find('#');
  if (fragment != std::string_view::npos) url = url.substr(0, fragment);
  const auto q = url.find('?');
  if (q != std::string_view::npos) {
    out.has_query = true;
    out.query = std::string(url.substr(q + 1));
    url = url.substr(0, q);
  }
  out.path = url.empty() ? "/" : std::string(url);
  for (char c : out.path)
    if (text::is_space(c)) return std::nullopt;
  return out;
}

bool is_valid_webhook(std::string_view url) {
  if (url.find_first_of("?#") != std::string_view::npos) return false;
  return parse_http_url(url).has_value();
}

}  // namespace t411
