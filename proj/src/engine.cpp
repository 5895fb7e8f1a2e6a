#include "t411/engine.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace t411::pipeline {

using nlohmann::json;
using transport::TransportError;

namespace {

constexpr std::chrono::milliseconds kWorkerPoll{200};

json budget_json(const transport::RateBudget& b) {
  return json{{"used", b.used},
              {"capacity", b.capacity},
              {"window_seconds", b.window.count()},
              {"window_start", format_timestamp(b.window_start)}};
}

}  // namespace

std::string_view to_string(IngestMode mode) noexcept {
  return mode == IngestMode::Poll ? "poll" : "stream";
}

std::optional<IngestMode> ingest_mode_from_string(std::string_view name) noexcept {
  if (name == "poll") return IngestMode::Poll;
  if (name == "stream") return IngestMode::Stream;
  return std::nullopt;
}

std::string_view to_string(Disposition d) noexcept {
  switch (d) {
    case Disposition::Posted: return "posted";
    case Disposition::Queued: return "queued";
    case Disposition::NoReply: return "no_reply";
    case Disposition::Duplicate: return "duplicate";
  }
  return "unknown";
}

json StatusReport::to_json() const {
  return json{{"running", running},
              {"mode", to_string(mode)},
              {"queue_depth", queue_depth},
              {"retry_queue_depth", retry_queue_depth},
              {"cursors", {{"mention", mention_cursor.since_id}, {"direct_message", dm_cursor.since_id}}},
              {"budgets", {{"rest", budget_json(rest_budget)}, {"streaming", budget_json(streaming_budget)}}},
              {"webhook_calls", webhook_calls},
              {"replies_posted", replies_posted},
              {"replies_dropped", replies_dropped}};
}

Engine::Engine(EngineConfig config, transport::Transport& transport,
               registry::RegistryStore& registry, dispatch::Dispatcher& dispatcher,
               const chatbot::RuleSet& rules)
    : config_(std::move(config)),
      transport_(transport),
      registry_(registry),
      dispatcher_(dispatcher),
      rules_(rules),
      bus_(config_.bus_capacity, config_.seen_capacity) {
  if (!is_valid_handle(config_.base_account)) throw std::invalid_argument("engine: bad base account");
  if (config_.retry_cap == 0) config_.retry_cap = 1;
  load_state();
}

Engine::~Engine() {
  stop_threads();
  try {
    persist();
  } catch (const std::exception& e) {
    spdlog::error("engine: final persist failed: {}", e.what());
  }
}

transport::PollCursor& Engine::cursor(Channel channel) {
  return channel == Channel::Mention ? mention_cursor_ : dm_cursor_;
}

StatusReport Engine::control(ControlCommand command) {
  std::lock_guard lock(control_mutex_);
  switch (command) {
    case ControlCommand::Start:
      if (!running_.exchange(true)) {
        spdlog::info("engine started ({} mode)", to_string(config_.mode));
        if (config_.background) start_threads();
      }
      break;
    case ControlCommand::Stop:
      if (running_.load()) {
        stop_threads();
        persist();
        spdlog::info("engine stopped");
      }
      break;
    case ControlCommand::Status:
      break;
  }
  return status();
}

StatusReport Engine::status() const {
  StatusReport s;
  s.running = running_.load();
  s.mode = config_.mode;
  s.queue_depth = bus_.depth();
  {
    std::lock_guard lock(retry_mutex_);
    s.retry_queue_depth = retry_queue_.size();
  }
  {
    std::lock_guard lock(state_mutex_);
    s.mention_cursor = mention_cursor_;
    s.dm_cursor = dm_cursor_;
  }
  s.rest_budget = transport_.rest_budget();
  s.streaming_budget = transport_.streaming_budget();
  s.webhook_calls = webhook_calls_.load();
  s.replies_posted = replies_posted_.load();
  s.replies_dropped = replies_dropped_.load();
  return s;
}

IngestionReport Engine::tick() {
  if (!running_.load()) throw std::logic_error("tick: engine is not running");
  if (config_.mode != IngestMode::Poll) throw std::logic_error("tick: engine is in stream mode");
  return poll_once();
}

IngestionReport Engine::poll_once() {
  std::lock_guard tick_lock(tick_mutex_);
  IngestionReport report;
  for (const Channel channel : {Channel::Mention, Channel::DirectMessage}) {
    transport::PollCursor current;
    {
      std::lock_guard lock(state_mutex_);
      current = cursor(channel);
    }
    transport::PollResult result;
    try {
      result = transport_.poll_new(channel, current);
    } catch (const TransportError& e) {
      spdlog::warn("poll {} skipped: {}", to_string(channel), e.what());
      report.skipped.push_back(std::string(to_string(channel)) + ": " +
                               std::string(transport::to_string(e.code())));
      continue;
    }
    report.fetched += result.messages.size();
    MessageId advanced = current.since_id;
    for (std::size_t i = 0; i < result.messages.size(); ++i) {
      const auto& msg = result.messages[i];
      const auto offer = bus_.offer(msg);
      if (offer == MessageBus::Offer::Full) {
        report.deferred += result.messages.size() - i;
        break;
      }
      (offer == MessageBus::Offer::Enqueued ? report.enqueued : report.deduped) += 1;
      advanced = msg.id;
    }
    std::lock_guard lock(state_mutex_);
    auto& cur = cursor(channel);
    cur.since_id = std::max(cur.since_id, advanced);
  }
  report.replies_retried = drain_retries();
  persist();
  if (report.fetched > 0 || !report.skipped.empty())
    spdlog::info("tick: fetched={} enqueued={} deduped={} deferred={} retried={}", report.fetched,
                 report.enqueued, report.deduped, report.deferred, report.replies_retried);
  return report;
}

std::optional<ProcessingOutcome> Engine::process_one() {
  if (!running_.load()) throw std::logic_error("process_one: engine is not running");
  auto msg = bus_.take();
  if (!msg) return std::nullopt;
  return process(*msg);
}

std::size_t Engine::drain() {
  std::size_t n = 0;
  while (process_one()) ++n;
  return n;
}

ProcessingOutcome Engine::process(const InboundMessage& msg) {
  ProcessingOutcome out;
  out.id = msg.id;
  out.channel = msg.channel;
  if (!bus_.mark_seen(msg.channel, msg.id)) {
    out.disposition = Disposition::Duplicate;
    return out;
  }
  // The claim is durable before any side effect: a crash from here on
  // loses this reply rather than sending it twice.
  persist();

  const ParsedCommand cmd = parse_command(strip_base_mention(msg.text, config_.base_account));
  const auto reg = cmd.key ? registry_.lookup(*cmd.key) : std::nullopt;
  if (reg) {
    out.route = Route::Webhook;
    auto call = dispatch::build_call(*reg, cmd, msg.author, config_.webhook_timeout);
    ++webhook_calls_;
    dispatcher_.run(call);
    out.reply = dispatch::compose_reply(*call.outcome, msg.author, msg.channel, msg.id);
    out.call = std::move(call);
  } else {
    out.route = Route::Chatbot;
    const std::string answer = chatbot::respond(rules_, cmd.original, msg.author);
    out.reply = dispatch::compose_reply(dispatch::Success{answer}, msg.author, msg.channel, msg.id);
  }

  if (!out.reply) {
    out.disposition = Disposition::NoReply;
    return out;
  }
  std::tie(out.disposition, out.posted_id) = deliver_impl(*out.reply);
  return out;
}

Disposition Engine::deliver(const OutboundReply& reply) { return deliver_impl(reply).first; }

std::pair<Disposition, std::optional<MessageId>> Engine::deliver_impl(const OutboundReply& reply) {
  std::lock_guard lock(retry_mutex_);
  if (retry_queue_.empty() && transport_.rest_remaining() > 0) {
    try {
      const MessageId id = transport_.post_reply(reply);
      ++replies_posted_;
      return {Disposition::Posted, id};
    } catch (const TransportError& e) {
      spdlog::warn("reply to {} deferred: {}", reply.in_reply_to, e.what());
      enqueue_retry_locked(PendingReply{reply, 1, next_seq_++});
      return {Disposition::Queued, std::nullopt};
    }
  }
  const std::uint64_t seq = next_seq_++;
  enqueue_retry_locked(PendingReply{reply, 0, seq});
  drain_retries_locked();
  for (const auto& pending : retry_queue_)
    if (pending.seq == seq) return {Disposition::Queued, std::nullopt};
  return {Disposition::Posted, std::nullopt};
}

void Engine::enqueue_retry_locked(PendingReply pending) {
  if (retry_queue_.size() >= config_.retry_capacity) {
    spdlog::error("retry queue full; dropping reply to message {}", pending.reply.in_reply_to);
    ++replies_dropped_;
    return;
  }
  retry_queue_.push_back(std::move(pending));
}

std::size_t Engine::drain_retries() {
  std::lock_guard lock(retry_mutex_);
  return drain_retries_locked();
}

std::size_t Engine::drain_retries_locked() {
  std::size_t posted = 0;
  while (!retry_queue_.empty() && transport_.rest_remaining() > 0) {
    auto& head = retry_queue_.front();
    try {
      transport_.post_reply(head.reply);
      ++posted;
      ++replies_posted_;
      retry_queue_.pop_front();
    } catch (const TransportError& e) {
      if (++head.attempts >= config_.retry_cap) {
        spdlog::error("dropping reply to message {} after {} attempts: {}", head.reply.in_reply_to,
                      head.attempts, e.what());
        ++replies_dropped_;
        retry_queue_.pop_front();
      }
      break;
    }
  }
  return posted;
}

void Engine::reset_cursors() {
  std::lock_guard lock(state_mutex_);
  mention_cursor_.since_id = 0;
  dm_cursor_.since_id = 0;
}

void Engine::persist() {
  if (config_.state_path.empty()) return;
  std::lock_guard lock(persist_mutex_);
  json cursors;
  {
    std::lock_guard state_lock(state_mutex_);
    for (const Channel channel : {Channel::Mention, Channel::DirectMessage}) {
      MessageId since = cursor(channel).since_id;
      // Never persist past a message that is queued but not yet claimed.
      if (const auto pending = bus_.lowest_pending(channel)) since = std::min(since, *pending - 1);
      cursors[std::string(to_string(channel))] = since;
    }
  }
  json seen = json::array();
  for (const Channel channel : {Channel::Mention, Channel::DirectMessage})
    for (const MessageId id : bus_.seen_ids(channel))
      seen.push_back(json{{"channel", to_string(channel)}, {"id", id}});

  const std::string bytes = json{{"cursors", cursors}, {"seen", seen}}.dump();
  auto tmp = config_.state_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write state snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, config_.state_path);
}

void Engine::load_state() {
  if (config_.state_path.empty()) return;
  std::ifstream in(config_.state_path, std::ios::binary);
  if (!in) return;
  std::ostringstream bytes;
  bytes << in.rdbuf();
  const json j = json::parse(bytes.str(), nullptr, false);
  const auto bad = [&] {
    return std::runtime_error("malformed state snapshot " + config_.state_path.string());
  };
  if (j.is_discarded() || !j.is_object() || !j.contains("cursors") || !j["cursors"].is_object())
    throw bad();
  for (const Channel channel : {Channel::Mention, Channel::DirectMessage}) {
    const auto& c = j["cursors"];
    const auto it = c.find(std::string(to_string(channel)));
    if (it == c.end()) continue;
    if (!it->is_number_unsigned()) throw bad();
    cursor(channel).since_id = it->get<MessageId>();
  }
  std::vector<MessageId> seen[2];
  if (const auto it = j.find("seen"); it != j.end()) {
    if (!it->is_array()) throw bad();
    for (const auto& entry : *it) {
      if (!entry.is_object() || !entry.contains("channel") || !entry.contains("id") ||
          !entry["channel"].is_string() || !entry["id"].is_number_unsigned())
        throw bad();
      const auto channel = channel_from_string(entry["channel"].get<std::string>());
      if (!channel) throw bad();
      seen[*channel == Channel::Mention ? 0 : 1].push_back(entry["id"].get<MessageId>());
    }
  }
  bus_.restore_seen(Channel::Mention, seen[0]);
  bus_.restore_seen(Channel::DirectMessage, seen[1]);
  spdlog::info("engine: restored cursors mention={} direct_message={}, {} seen ids",
               mention_cursor_.since_id, dm_cursor_.since_id, seen[0].size() + seen[1].size());
}

void Engine::start_threads() {
  if (config_.mode == IngestMode::Poll && config_.poll_interval.count() > 0)
    ingest_thread_ = std::thread([this] { scheduler_loop(); });
  else if (config_.mode == IngestMode::Stream)
    ingest_thread_ = std::thread([this] { stream_loop(); });
  for (std::size_t i = 0; i < dispatcher_.parallelism(); ++i)
    workers_.emplace_back([this] { worker_loop(); });
}

void Engine::stop_threads() {
  {
    std::lock_guard lock(wake_mutex_);
    running_.store(false);
  }
  wake_.notify_all();
  bus_.interrupt();
  if (ingest_thread_.joinable()) ingest_thread_.join();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
}

bool Engine::wait_interval(std::chrono::seconds interval) {
  std::unique_lock lock(wake_mutex_);
  wake_.wait_for(lock, interval, [&] { return !running_.load(); });
  return running_.load();
}

void Engine::scheduler_loop() {
  do {
    try {
      poll_once();
    } catch (const std::exception& e) {
      spdlog::error("tick failed: {}", e.what());
    }
  } while (wait_interval(config_.poll_interval));
}

void Engine::stream_loop() {
  const auto backoff = std::max(config_.poll_interval, std::chrono::seconds{1});
  std::unique_ptr<transport::MessageStream> stream;
  auto last_housekeeping = std::chrono::steady_clock::now();
  while (running_.load()) {
    if (!stream) {
      try {
        stream = transport_.open_stream();
      } catch (const TransportError& e) {
        spdlog::warn("open stream failed: {}", e.what());
        if (!wait_interval(backoff)) break;
        continue;
      }
      // Catch up on anything that arrived while disconnected.
      try {
        poll_once();
      } catch (const std::exception& e) {
        spdlog::error("catch-up poll failed: {}", e.what());
      }
    }

    if (auto msg = stream->next(kWorkerPoll)) {
      const auto offer = bus_.offer(*msg);
      if (offer == MessageBus::Offer::Full) {
        spdlog::warn("bus full; reopening stream to catch up from the cursor");
        stream.reset();
        if (!wait_interval(backoff)) break;
        continue;
      }
      std::lock_guard lock(state_mutex_);
      auto& cur = cursor(msg->channel);
      cur.since_id = std::max(cur.since_id, msg->id);
    } else if (!stream->is_open()) {
      stream.reset();
    }

    if (std::chrono::steady_clock::now() - last_housekeeping >= backoff) {
      last_housekeeping = std::chrono::steady_clock::now();
      drain_retries();
      persist();
    }
  }
}

void Engine::worker_loop() {
  while (running_.load()) {
    auto msg = bus_.take_for(kWorkerPoll);
    if (!msg) continue;
    try {
      process(*msg);
    } catch (const std::exception& e) {
      spdlog::error("processing message {} failed: {}", msg->id, e.what());
    }
  }
}

}  // namespace t411::pipeline
