#pragma once

// Key -> webhook service store with first-come-first-served reservation,
// persisted as an append-only journal of one JSON object per line:
//
//   {"op":"register","key":"w","webhook":"http://...","owner":"alice","ts":"2015-09-01T12:00:00Z"}
//   {"op":"unregister","key":"w","owner":"alice","ts":"..."}

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "t411/domain.hpp"

namespace t411::registry {

enum class RegistryErrc {
  RejectedKey,
  KeyTaken,
  InvalidWebhook,
  InvalidOwner,
  NotFound,
  NotOwner,
  CorruptJournal,
  JournalIo,
};

std::string_view to_string(RegistryErrc code) noexcept;

class RegistryError : public std::runtime_error {
 public:
  RegistryError(RegistryErrc code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}
  RegistryErrc code() const noexcept { return code_; }
  // 1-based journal line for CorruptJournal, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  RegistryErrc code_;
  std::size_t line_;
};

using Entries = std::map<std::string, ServiceRegistration>;

// Replays journal bytes from an empty map. Throws CorruptJournal.
Entries replay(std::string_view journal);

class RegistryStore {
 public:
  // In-memory only; nothing is journaled.
  RegistryStore() = default;

  // Loads by replaying the journal at `journal_path` (a missing file is an
  // empty store). Later mutations append to that file.
  explicit RegistryStore(std::filesystem::path journal_path);

  RegistryStore(const RegistryStore&) = delete;
  RegistryStore& operator=(const RegistryStore&) = delete;

  ServiceRegistration register_service(std::string_view raw_key, std::string_view webhook,
                                       std::string_view owner, Timestamp now);
  ServiceRegistration register_service(std::string_view raw_key, std::string_view webhook,
                                       std::string_view owner);

  // `key` must already be normalized.
  std::optional<ServiceRegistration> lookup(std::string_view key) const;

  void unregister(std::string_view raw_key, std::string_view requester);

  // Journal bytes that rebuild exactly the current entries.
  std::string snapshot() const;

  // Rewrites the journal file as snapshot() (atomic rename).
  void compact();

  Entries entries() const;
  std::vector<ServiceRegistration> list() const;
  std::size_t size() const;
  const std::filesystem::path& journal_path() const noexcept { return journal_path_; }

 private:
  std::string snapshot_locked() const;
  void append_locked(const std::string& line);

  std::filesystem::path journal_path_;
  mutable std::shared_mutex mutex_;
  Entries entries_;
};

}  // namespace t411::registry
