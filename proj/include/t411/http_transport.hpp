#pragma once

#include <chrono>
#include <memory>
#include <mutex>

#include "t411/transport.hpp"
#include "t411/url.hpp"

namespace httplib {
class Client;
}

namespace t411::transport {

// Speaks the generic wire schema (see wire.hpp). HTTP 429 maps to
// RateLimited; connection failures and other non-2xx replies map to
// TransportUnavailable.
class HttpTransport final : public Transport {
 public:
  HttpTransport(TransportEndpoint endpoint, BudgetLimits rest = kDefaultRestLimits,
                BudgetLimits streaming = kDefaultStreamingLimits,
                std::chrono::seconds timeout = std::chrono::seconds{10});
  ~HttpTransport() override;

  Timestamp now() const override;

 protected:
  std::vector<InboundMessage> fetch(Channel channel, MessageId since_id) override;
  std::unique_ptr<MessageStream> connect_stream() override;
  MessageId publish(const OutboundReply& reply) override;

 private:
  std::string path_for(std::string_view suffix) const;

  HttpUrl base_;
  std::chrono::seconds timeout_;
  std::mutex client_mutex_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace t411::transport
