#include "t411/http_transport.hpp"

#include <future>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "t411/blocking_queue.hpp"
#include "t411/wire.hpp"

namespace t411::transport {

namespace {

std::unique_ptr<httplib::Client> make_client(const HttpUrl& base, std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(base.origin());
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

[[noreturn]] void throw_for(const httplib::Result& res, std::string_view what) {
  if (res && res->status == 429)
    throw TransportError(TransportErrc::RateLimited, std::string(what) + ": HTTP 429");
  if (res)
    throw TransportError(TransportErrc::TransportUnavailable,
                         std::string(what) + ": HTTP " + std::to_string(res->status));
  throw TransportError(TransportErrc::TransportUnavailable,
                       std::string(what) + ": " + httplib::to_string(res.error()));
}

class HttpStream final : public MessageStream {
 public:
  HttpStream(const HttpUrl& base, std::string path, std::chrono::seconds connect_timeout)
      : client_(make_client(base, connect_timeout)), path_(std::move(path)) {
    // Idle streams are normal; only close() or the server ends one.
    client_->set_read_timeout(std::chrono::hours{24});
    auto status = opened_.get_future();
    reader_ = std::thread([this] { run(); });
    if (status.wait_for(connect_timeout + std::chrono::seconds{1}) != std::future_status::ready) {
      close();
      throw TransportError(TransportErrc::TransportUnavailable, "stream: no response");
    }
    const int code = status.get();
    if (code == 200) return;
    close();
    if (code == 429) throw TransportError(TransportErrc::RateLimited, "stream: HTTP 429");
    throw TransportError(TransportErrc::TransportUnavailable,
                         code < 0 ? "stream: connection failed" : "stream: HTTP " + std::to_string(code));
  }

  ~HttpStream() override { close(); }

  std::optional<InboundMessage> next(std::chrono::milliseconds timeout) override {
    return queue_.pop_for(timeout);
  }

  void close() override {
    closing_ = true;
    client_->stop();
    queue_.close();
    if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
  }

  bool is_open() const override { return !queue_.closed(); }

 private:
  void run() {
    auto res = client_->Get(
        path_,
        [this](const httplib::Response& response) {
          report(response.status);
          return response.status == 200;
        },
        [this](const char* data, std::size_t len) {
          buffer_.append(data, len);
          drain_lines();
          return !closing_.load();
        });
    report(-1);
    if (!closing_) spdlog::info("stream ended: {}", res ? "server closed" : httplib::to_string(res.error()));
    queue_.close();
  }

  void report(int status) {
    if (!reported_.exchange(true)) opened_.set_value(status);
  }

  void drain_lines() {
    std::size_t nl;
    while ((nl = buffer_.find('\n')) != std::string::npos) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      auto msg = j.is_discarded() ? std::nullopt : wire::message_from_json(j, std::nullopt);
      if (!msg) {
        spdlog::warn("stream: skipping malformed line");
        continue;
      }
      queue_.try_push(std::move(*msg));
    }
  }

  std::unique_ptr<httplib::Client> client_;
  std::string path_;
  std::string buffer_;
  BlockingQueue<InboundMessage> queue_;
  std::promise<int> opened_;
  std::atomic<bool> reported_{false};
  std::atomic<bool> closing_{false};
  std::thread reader_;
};

HttpUrl require_base(const TransportEndpoint& endpoint) {
  auto url = parse_http_url(endpoint.base_url);
  if (!url || url->has_query) throw std::invalid_argument("transport base_url must be an absolute http(s) URL");
  return *url;
}

}  // namespace

HttpTransport::HttpTransport(TransportEndpoint endpoint, BudgetLimits rest, BudgetLimits streaming,
                             std::chrono::seconds timeout)
    : Transport(endpoint, rest, streaming,
                std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now())),
      base_(require_base(endpoint)),
      timeout_(timeout),
      client_(make_client(base_, timeout)) {}

HttpTransport::~HttpTransport() = default;

Timestamp HttpTransport::now() const {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string HttpTransport::path_for(std::string_view suffix) const {
  std::string path = base_.path;
  while (!path.empty() && path.back() == '/') path.pop_back();
  path.append(suffix);
  return path;
}

std::vector<InboundMessage> HttpTransport::fetch(Channel channel, MessageId since_id) {
  const std::string path =
      path_for(wire::poll_path(channel)) + "?since_id=" + std::to_string(since_id);
  httplib::Result res;
  {
    std::lock_guard lock(client_mutex_);
    res = client_->Get(path);
  }
  if (!res || res->status != 200) throw_for(res, "poll");

  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array())
    throw TransportError(TransportErrc::TransportUnavailable, "poll: malformed envelope");
  std::vector<InboundMessage> out;
  for (const auto& item : body["messages"]) {
    if (auto msg = wire::message_from_json(item, channel)) {
      out.push_back(std::move(*msg));
    } else {
      spdlog::warn("poll: skipping malformed message object");
    }
  }
  return out;
}

std::unique_ptr<MessageStream> HttpTransport::connect_stream() {
  return std::make_unique<HttpStream>(base_, path_for("/stream"), timeout_);
}

MessageId HttpTransport::publish(const OutboundReply& reply) {
  const std::string body = wire::reply_request(reply).dump();
  httplib::Result res;
  {
    std::lock_guard lock(client_mutex_);
    res = client_->Post(path_for(wire::post_path(reply.channel)), body, "application/json");
  }
  if (!res || res->status / 100 != 2) throw_for(res, "post");
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("id") || !j["id"].is_number_unsigned())
    throw TransportError(TransportErrc::TransportUnavailable, "post: malformed response");
  return j["id"].get<MessageId>();
}

}  // namespace t411::transport
