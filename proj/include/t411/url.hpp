#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace t411 {

// An absolute http/https URL split the way httplib::Client wants it.
struct HttpUrl {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;  // starts with '/'; "/" when the URL has none
  std::string query;  // without the '?'; empty when absent
  bool has_query = false;

  // scheme://host:port with the port always spelled out.
  std::string origin() const;
};

std::optional<HttpUrl> parse_http_url(std::string_view url);

// Absolute http/https, non-empty host, no '?' and no '#'.
bool is_valid_webhook(std::string_view url);

}  // namespace t411
