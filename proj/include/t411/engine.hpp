#pragma once

// The gateway core: a scheduler drives ingestion into the message bus, and
// processor workers run each message through
//   strip mention -> parse key -> lookup webhook -> GET -> compose reply -> post
// falling back to the chatbot when no service claims the key.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "t411/chatbot.hpp"
#include "t411/dispatch.hpp"
#include "t411/message_bus.hpp"
#include "t411/registry.hpp"
#include "t411/transport.hpp"

namespace t411::pipeline {

enum class IngestMode { Poll, Stream };

std::string_view to_string(IngestMode mode) noexcept;
std::optional<IngestMode> ingest_mode_from_string(std::string_view name) noexcept;

struct EngineConfig {
  std::string base_account = "t411";
  IngestMode mode = IngestMode::Poll;
  // 0 means tick on demand only.
  std::chrono::seconds poll_interval{60};
  std::size_t bus_capacity = MessageBus::kDefaultCapacity;
  std::size_t seen_capacity = MessageBus::kDefaultSeenCapacity;
  unsigned retry_cap = 3;
  std::size_t retry_capacity = 4096;
  std::chrono::seconds webhook_timeout = dispatch::kDefaultWebhookTimeout;
  // Run the scheduler and processor threads on start. Off for
  // step-by-step driving through tick() and process_one().
  bool background = true;
  // Cursor and seen-set snapshot; empty disables persistence.
  std::filesystem::path state_path;
};

struct IngestionReport {
  std::size_t fetched = 0;
  std::size_t enqueued = 0;
  std::size_t deduped = 0;
  std::size_t deferred = 0;  // left for the next tick because the bus was full
  std::size_t replies_retried = 0;
  std::vector<std::string> skipped;  // e.g. "mention: RateLimited"
};

enum class Route { Webhook, Chatbot };

enum class Disposition {
  Posted,     // reply is on the platform
  Queued,     // waiting in the retry queue
  NoReply,    // empty response, nothing to post
  Duplicate,  // id already processed
};

std::string_view to_string(Disposition d) noexcept;

struct ProcessingOutcome {
  MessageId id = 0;
  Channel channel = Channel::Mention;
  Disposition disposition = Disposition::NoReply;
  std::optional<Route> route;
  std::optional<OutboundReply> reply;
  std::optional<MessageId> posted_id;
  std::optional<dispatch::WebhookCall> call;
};

struct StatusReport {
  bool running = false;
  IngestMode mode = IngestMode::Poll;
  std::size_t queue_depth = 0;
  std::size_t retry_queue_depth = 0;
  transport::PollCursor mention_cursor{Channel::Mention, 0};
  transport::PollCursor dm_cursor{Channel::DirectMessage, 0};
  transport::RateBudget rest_budget;
  transport::RateBudget streaming_budget;
  std::uint64_t webhook_calls = 0;
  std::uint64_t replies_posted = 0;
  std::uint64_t replies_dropped = 0;

  nlohmann::json to_json() const;
};

enum class ControlCommand { Start, Stop, Status };

class Engine {
 public:
  Engine(EngineConfig config, transport::Transport& transport, registry::RegistryStore& registry,
         dispatch::Dispatcher& dispatcher, const chatbot::RuleSet& rules);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // start is idempotent; stop waits for the current tick and in-flight
  // messages, then freezes all webhook activity.
  StatusReport control(ControlCommand command);
  StatusReport status() const;
  bool running() const noexcept { return running_.load(); }

  // Polls mentions then direct messages, enqueues unseen messages in id
  // order, advances cursors and drains the retry queue. Requires a running
  // engine in Poll mode.
  IngestionReport tick();

  // Processes the next queued message; nullopt when the bus is empty.
  // Requires a running engine.
  std::optional<ProcessingOutcome> process_one();

  // process_one until the bus is empty. Returns how many were taken.
  std::size_t drain();

  // Posts now, or queues behind earlier replies when posting is blocked.
  Disposition deliver(const OutboundReply& reply);

  // Posts queued replies while the Rest budget allows. Returns posts made.
  std::size_t drain_retries();

  // Operator hook: rewinds both cursors to 0 so the next tick refetches
  // everything the platform still has. The seen-set keeps this safe.
  void reset_cursors();

  // Writes the cursor/seen snapshot if a state path is configured.
  void persist();

  MessageBus& bus() noexcept { return bus_; }
  const EngineConfig& config() const noexcept { return config_; }

 private:
  struct PendingReply {
    OutboundReply reply;
    unsigned attempts = 0;
    std::uint64_t seq = 0;
  };

  ProcessingOutcome process(const InboundMessage& msg);
  IngestionReport poll_once();
  std::pair<Disposition, std::optional<MessageId>> deliver_impl(const OutboundReply& reply);
  void enqueue_retry_locked(PendingReply pending);
  std::size_t drain_retries_locked();
  transport::PollCursor& cursor(Channel channel);
  void load_state();
  void start_threads();
  void stop_threads();
  void scheduler_loop();
  void stream_loop();
  void worker_loop();
  bool wait_interval(std::chrono::seconds interval);

  EngineConfig config_;
  transport::Transport& transport_;
  registry::RegistryStore& registry_;
  dispatch::Dispatcher& dispatcher_;
  const chatbot::RuleSet& rules_;
  MessageBus bus_;

  std::atomic<bool> running_{false};
  mutable std::mutex control_mutex_;  // serializes start/stop

  mutable std::mutex state_mutex_;  // cursors
  transport::PollCursor mention_cursor_{Channel::Mention, 0};
  transport::PollCursor dm_cursor_{Channel::DirectMessage, 0};

  std::mutex tick_mutex_;

  mutable std::mutex retry_mutex_;
  std::deque<PendingReply> retry_queue_;
  std::uint64_t next_seq_ = 0;

  std::mutex persist_mutex_;

  std::atomic<std::uint64_t> webhook_calls_{0};
  std::atomic<std::uint64_t> replies_posted_{0};
  std::atomic<std::uint64_t> replies_dropped_{0};

  std::mutex wake_mutex_;
  std::condition_variable wake_;
  std::thread ingest_thread_;
  std::vector<std::thread> workers_;
};

}  // namespace t411::pipeline
