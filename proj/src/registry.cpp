#include "t411/registry.hpp"

#include <cassert>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "t411/text.hpp"
#include "t411/url.hpp"

namespace t411::registry {

using nlohmann::json;

namespace {

std::string register_record(const ServiceRegistration& reg) {
  return json{{"op", "register"},
              {"key", reg.key},
              {"webhook", reg.webhook},
              {"owner", reg.owner},
              {"ts", format_timestamp(reg.registered_at)}}
      .dump();
}

std::string unregister_record(std::string_view key, std::string_view owner, Timestamp ts) {
  return json{{"op", "unregister"}, {"key", key}, {"owner", owner}, {"ts", format_timestamp(ts)}}
      .dump();
}

Timestamp system_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string string_field(const json& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end() || !it->is_string())
    throw RegistryError(RegistryErrc::CorruptJournal,
                        "journal line " + std::to_string(line) + ": missing '" + name + "'", line);
  return it->get<std::string>();
}

[[noreturn]] void corrupt(std::size_t line, const std::string& why) {
  throw RegistryError(RegistryErrc::CorruptJournal,
                      "journal line " + std::to_string(line) + ": " + why, line);
}

void write_file_synced(const std::filesystem::path& path, const std::string& bytes,
                       const char* mode) {
  std::FILE* f = std::fopen(path.c_str(), mode);
  if (!f) throw RegistryError(RegistryErrc::JournalIo, "cannot open " + path.string());
  const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size() &&
                  std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw RegistryError(RegistryErrc::JournalIo, "cannot write " + path.string());
}

}  // namespace

std::string_view to_string(RegistryErrc code) noexcept {
  switch (code) {
    case RegistryErrc::RejectedKey: return "RejectedKey";
    case RegistryErrc::KeyTaken: return "KeyTaken";
    case RegistryErrc::InvalidWebhook: return "InvalidWebhook";
    case RegistryErrc::InvalidOwner: return "InvalidOwner";
    case RegistryErrc::NotFound: return "NotFound";
    case RegistryErrc::NotOwner: return "NotOwner";
    case RegistryErrc::CorruptJournal: return "CorruptJournal";
    case RegistryErrc::JournalIo: return "JournalIo";
  }
  return "unknown";
}

Entries replay(std::string_view journal) {
  Entries entries;
  std::size_t line_no = 0;
  while (!journal.empty()) {
    ++line_no;
    const auto nl = journal.find('\n');
    const std::string_view line = journal.substr(0, nl);
    journal = nl == std::string_view::npos ? std::string_view{} : journal.substr(nl + 1);
    if (text::trim(line).empty()) continue;

    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) corrupt(line_no, "not a JSON object");
    const std::string op = string_field(j, "op", line_no);
    const std::string raw_key = string_field(j, "key", line_no);
    const auto key = normalize_key(raw_key);
    if (!key || *key != raw_key) corrupt(line_no, "invalid key '" + raw_key + "'");
    const std::string owner = string_field(j, "owner", line_no);
    const auto ts = parse_timestamp(string_field(j, "ts", line_no));
    if (!ts) corrupt(line_no, "bad timestamp");

    if (op == "register") {
      const std::string webhook = string_field(j, "webhook", line_no);
      if (!is_valid_webhook(webhook)) corrupt(line_no, "invalid webhook");
      if (!is_valid_handle(owner)) corrupt(line_no, "invalid owner");
      if (!entries.emplace(*key, ServiceRegistration{*key, webhook, owner, *ts}).second)
        corrupt(line_no, "duplicate register of '" + *key + "'");
    } else if (op == "unregister") {
      const auto it = entries.find(*key);
      if (it == entries.end()) corrupt(line_no, "unregister of absent key '" + *key + "'");
      if (it->second.owner != owner) corrupt(line_no, "unregister by non-owner");
      entries.erase(it);
    } else {
      corrupt(line_no, "unknown op '" + op + "'");
    }
  }
  return entries;
}

RegistryStore::RegistryStore(std::filesystem::path journal_path)
    : journal_path_(std::move(journal_path)) {
  std::ifstream in(journal_path_, std::ios::binary);
  if (!in) return;
  std::ostringstream bytes;
  bytes << in.rdbuf();
  entries_ = replay(bytes.str());
  spdlog::info("registry: loaded {} services from {}", entries_.size(), journal_path_.string());
}

ServiceRegistration RegistryStore::register_service(std::string_view raw_key,
                                                    std::string_view webhook,
                                                    std::string_view owner, Timestamp now) {
  const auto key = normalize_key(raw_key);
  if (!key) throw RegistryError(RegistryErrc::RejectedKey, "key must match [a-z0-9_]{1,16}");
  if (!is_valid_webhook(webhook))
    throw RegistryError(RegistryErrc::InvalidWebhook,
                        "webhook must be an absolute http(s) URL without a query string");
  const std::string_view bare_owner = bare_handle(owner);
  if (!is_valid_handle(bare_owner)) throw RegistryError(RegistryErrc::InvalidOwner, "owner must be a handle");

  ServiceRegistration reg{*key, std::string(webhook), std::string(bare_owner), now};
  std::unique_lock lock(mutex_);
  if (entries_.contains(*key))
    throw RegistryError(RegistryErrc::KeyTaken, "key '" + *key + "' is already registered");
  append_locked(register_record(reg));
  entries_.emplace(*key, reg);
  return reg;
}

ServiceRegistration RegistryStore::register_service(std::string_view raw_key,
                                                    std::string_view webhook,
                                                    std::string_view owner) {
  return register_service(raw_key, webhook, owner, system_now());
}

std::optional<ServiceRegistration> RegistryStore::lookup(std::string_view key) const {
  assert(normalize_key(key) == std::optional<std::string>(std::string(key)) &&
         "lookup expects a normalized key");
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void RegistryStore::unregister(std::string_view raw_key, std::string_view requester) {
  const auto key = normalize_key(raw_key);
  std::unique_lock lock(mutex_);
  const auto it = key ? entries_.find(*key) : entries_.end();
  if (it == entries_.end())
    throw RegistryError(RegistryErrc::NotFound, "no service under '" + std::string(raw_key) + "'");
  if (it->second.owner != bare_handle(requester))
    throw RegistryError(RegistryErrc::NotOwner, "only the owner may remove '" + *key + "'");
  append_locked(unregister_record(*key, it->second.owner, system_now()));
  entries_.erase(it);
}

std::string RegistryStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return snapshot_locked();
}

std::string RegistryStore::snapshot_locked() const {
  std::string out;
  for (const auto& [key, reg] : entries_) {
    out += register_record(reg);
    out += '\n';
  }
  return out;
}

void RegistryStore::compact() {
  if (journal_path_.empty()) return;
  std::unique_lock lock(mutex_);
  const std::string bytes = snapshot_locked();
  auto tmp = journal_path_;
  tmp += ".tmp";
  write_file_synced(tmp, bytes, "wb");
  std::error_code ec;
  std::filesystem::rename(tmp, journal_path_, ec);
  if (ec) throw RegistryError(RegistryErrc::JournalIo, "cannot replace " + journal_path_.string());
}

Entries RegistryStore::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::vector<ServiceRegistration> RegistryStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<ServiceRegistration> out;
  out.reserve(entries_.size());
  for (const auto& [key, reg] : entries_) out.push_back(reg);
  return out;
}

std::size_t RegistryStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void RegistryStore::append_locked(const std::string& line) {
  if (journal_path_.empty()) return;
  write_file_synced(journal_path_, line + "\n", "ab");
}

}  // namespace t411::registry
