#pragma once

// Local HTTP server standing in for third-party webhooks. Records every
// request target exactly as it arrived on the wire.

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "httplib.h"

namespace t411::testing {

struct StubResponse {
  int status = 200;
  std::string body;
  std::chrono::milliseconds delay{0};
};

class StubWebhook {
 public:
  using Handler = std::function<StubResponse(const httplib::Request&)>;

  explicit StubWebhook(Handler handler) : handler_(std::move(handler)) {
    server_.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        targets_.push_back(req.target);
      }
      const StubResponse out = handler_(req);
      if (out.delay.count() > 0) std::this_thread::sleep_for(out.delay);
      res.status = out.status;
      res.set_content(out.body, "text/plain; charset=utf-8");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubWebhook() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  std::vector<std::string> targets() const {
    std::lock_guard lock(mutex_);
    return targets_;
  }

  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return targets_.size();
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> targets_;
};

// A port with nothing listening on it.
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);  // bound but never listened, so connects are refused
  return ntohs(addr.sin_port);
}

}  // namespace t411::testing
