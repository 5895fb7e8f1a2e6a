#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "t411/registry.hpp"
#include "t411/url.hpp"

namespace t411 {
namespace {

using registry::RegistryErrc;
using registry::RegistryError;
using registry::RegistryStore;

const Timestamp kT0{std::chrono::seconds{1441108800}};

RegistryErrc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const RegistryError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected RegistryError";
  return RegistryErrc::JournalIo;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("t411-registry-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Webhook, Validation) {
  EXPECT_TRUE(is_valid_webhook("http://example.org/weather"));
  EXPECT_TRUE(is_valid_webhook("https://linkstore.ru:8443/t411/quote.jsp"));
  EXPECT_TRUE(is_valid_webhook("http://127.0.0.1:9000"));
  EXPECT_FALSE(is_valid_webhook("http://example.org/w?x=1"));
  EXPECT_FALSE(is_valid_webhook("http://example.org/w#frag"));
  EXPECT_FALSE(is_valid_webhook("ftp://example.org/w"));
  EXPECT_FALSE(is_valid_webhook("example.org/w"));
  EXPECT_FALSE(is_valid_webhook("http:///w"));
  EXPECT_FALSE(is_valid_webhook("http://host:99999/"));
}

TEST(Url, SplitsOriginAndPath) {
  const auto url = parse_http_url("http://linkstore.ru/t411/quote.jsp?t=t%20ORCL");
  ASSERT_TRUE(url);
  EXPECT_EQ(url->origin(), "http://linkstore.ru:80");
  EXPECT_EQ(url->path, "/t411/quote.jsp");
  EXPECT_EQ(url->query, "t=t%20ORCL");
}

TEST(Registry, RegisterWeatherKey) {
  RegistryStore store;
  const auto reg = store.register_service("w", "http://example.org/weather", "alice", kT0);
  EXPECT_EQ(reg, (ServiceRegistration{"w", "http://example.org/weather", "alice", kT0}));
}

TEST(Registry, SecondRegistrationIsKeyTaken) {
  RegistryStore store;
  store.register_service("w", "http://example.org/weather", "alice", kT0);
  EXPECT_EQ(code_of([&] { store.register_service("W", "http://other/", "bob", kT0); }), RegistryErrc::KeyTaken);
  EXPECT_EQ(store.lookup("w")->owner, "alice");
}

TEST(Registry, RegisterQuoteKeyAndLookUp) {
  RegistryStore store;
  store.register_service("t", "http://linkstore.ru/t411/quote.jsp", "ops", kT0);
  const auto found = store.lookup("t");
  ASSERT_TRUE(found);
  EXPECT_EQ(found->webhook, "http://linkstore.ru/t411/quote.jsp");
  EXPECT_FALSE(store.lookup("zzz"));
}

TEST(Registry, RejectsBadInput) {
  RegistryStore store;
  EXPECT_EQ(code_of([&] { store.register_service("stock-quote", "http://x/", "a", kT0); }), RegistryErrc::RejectedKey);
  EXPECT_EQ(code_of([&] { store.register_service("s", "http://x/?a=1", "a", kT0); }), RegistryErrc::InvalidWebhook);
  EXPECT_EQ(code_of([&] { store.register_service("s", "not a url", "a", kT0); }), RegistryErrc::InvalidWebhook);
  EXPECT_EQ(code_of([&] { store.register_service("s", "http://x/", "", kT0); }), RegistryErrc::InvalidOwner);
  EXPECT_EQ(store.size(), 0u);
}

#ifndef NDEBUG
TEST(RegistryDeathTest, LookupOfUnnormalizedKeyAsserts) {
  RegistryStore store;
  EXPECT_DEATH(store.lookup("W"), "normalized");
}
#endif

TEST(Registry, Unregister) {
  RegistryStore store;
  store.register_service("w", "http://example.org/weather", "alice", kT0);
  EXPECT_EQ(code_of([&] { store.unregister("w", "bob"); }), RegistryErrc::NotOwner);
  EXPECT_EQ(code_of([&] { store.unregister("x", "alice"); }), RegistryErrc::NotFound);
  store.unregister("w", "@alice");
  EXPECT_FALSE(store.lookup("w"));
}

TEST(Registry, WebhookIsStoredByteForByte) {
  RegistryStore store;
  const std::string hook = "https://Example.org:8443/Path/%7Euser/hook.cgi";
  store.register_service("Key_1", hook, "alice", kT0);
  EXPECT_EQ(store.lookup(*normalize_key("Key_1"))->webhook, hook);
}

TEST(RegistryJournal, EmptyOrMissingFileIsEmptyStore) {
  TempDir dir;
  EXPECT_EQ(RegistryStore(dir.file("missing.journal")).size(), 0u);
  std::ofstream(dir.file("empty.journal")).close();
  EXPECT_EQ(RegistryStore(dir.file("empty.journal")).size(), 0u);
}

TEST(RegistryJournal, SnapshotLoadRoundTrip) {
  TempDir dir;
  RegistryStore live;
  live.register_service("w", "http://example.org/weather", "alice", kT0);
  live.register_service("t", "http://linkstore.ru/t411/quote.jsp", "ops", kT0);
  live.register_service("e", "http://localhost:8080/echo", "bob", kT0);
  std::ofstream(dir.file("snap.journal"), std::ios::binary) << live.snapshot();
  RegistryStore loaded(dir.file("snap.journal"));
  EXPECT_EQ(loaded.entries(), live.entries());
  EXPECT_EQ(loaded.size(), 3u);
}

TEST(RegistryJournal, MutationsAreJournaledBeforeReturning) {
  TempDir dir;
  const auto path = dir.file("reg.journal");
  {
    RegistryStore store(path);
    store.register_service("w", "http://example.org/weather", "alice", kT0);
    EXPECT_NE(read_all(path).find("\"op\":\"register\""), std::string::npos);
    store.unregister("w", "alice");
  }
  const std::string journal = read_all(path);
  EXPECT_EQ(std::count(journal.begin(), journal.end(), '\n'), 2);
  // Replay oracle: register then unregister of "w" leaves nothing.
  EXPECT_TRUE(registry::replay(journal).empty());
  EXPECT_FALSE(RegistryStore(path).lookup("w"));
}

TEST(RegistryJournal, CompactionRewritesToSnapshot) {
  TempDir dir;
  const auto path = dir.file("reg.journal");
  RegistryStore store(path);
  store.register_service("a", "http://x/a", "o", kT0);
  store.register_service("b", "http://x/b", "o", kT0);
  store.unregister("a", "o");
  store.compact();
  EXPECT_EQ(read_all(path), store.snapshot());
  EXPECT_EQ(RegistryStore(path).entries(), store.entries());
}

TEST(RegistryJournal, CorruptLineIsReportedByNumber) {
  const std::string good =
      R"({"op":"register","key":"w","webhook":"http://x/w","owner":"a","ts":"2015-09-01T12:00:00Z"})";
  const auto corrupt_line = [&](const std::string& journal) -> std::size_t {
    try {
      registry::replay(journal);
    } catch (const RegistryError& e) {
      EXPECT_EQ(e.code(), RegistryErrc::CorruptJournal);
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(corrupt_line(good + "\n{not json\n"), 2u);
  EXPECT_EQ(corrupt_line(good + "\n" + good + "\n"), 2u);  // duplicate register
  EXPECT_EQ(corrupt_line("\n" + good + "\n{\"op\":\"rename\",\"key\":\"w\",\"owner\":\"a\",\"ts\":\"2015-09-01T12:00:00Z\"}\n"), 3u);
  EXPECT_EQ(corrupt_line(R"({"op":"unregister","key":"w","owner":"a","ts":"2015-09-01T12:00:00Z"})"), 1u);
  EXPECT_EQ(corrupt_line(R"({"op":"register","key":"W","webhook":"http://x/w","owner":"a","ts":"2015-09-01T12:00:00Z"})"), 1u);
  EXPECT_EQ(corrupt_line(good + "\n"), 0u);
}

TEST(RegistryJournal, ReplayReproducesLiveMapForRandomSequences) {
  TempDir dir;
  std::mt19937_64 rng(1234);
  const std::vector<std::string> keys = {"a", "b", "c", "w", "t", "e", "k_1", "Z"};
  const std::vector<std::string> owners = {"alice", "bob", "carol"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto path = dir.file("seq" + std::to_string(trial) + ".journal");
    RegistryStore live(path);
    for (int op = 0; op < 30; ++op) {
      const auto& key = keys[rng() % keys.size()];
      const auto& owner = owners[rng() % owners.size()];
      try {
        if (rng() % 3)
          live.register_service(key, "http://hooks.example/" + key + "/" + owner, owner, kT0);
        else
          live.unregister(key, owner);
      } catch (const RegistryError&) {
      }
    }
    EXPECT_EQ(RegistryStore(path).entries(), live.entries());
    EXPECT_EQ(registry::replay(live.snapshot()), live.entries());
  }
}

TEST(Registry, ConcurrentLookupsDuringRegistration) {
  RegistryStore store;
  store.register_service("w", "http://x/w", "a", kT0);
  std::atomic<bool> stop{false};
  std::atomic<int> misses{0};
  std::thread reader([&] {
    while (!stop) if (!store.lookup("w")) ++misses;
  });
  for (int i = 0; i < 200; ++i) store.register_service("k" + std::to_string(i), "http://x/k", "a", kT0);
  stop = true;
  reader.join();
  EXPECT_EQ(misses.load(), 0);
  EXPECT_EQ(store.size(), 201u);
}

}  // namespace
}  // namespace t411
