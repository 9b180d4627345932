#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "aidwallet/ae.hpp"
#include "aidwallet/frame.hpp"
#include "aidwallet/record.hpp"

namespace aidwallet {

enum class OramVariant : std::uint8_t { kNaive = 0, kTree = 1, kRecursive = 2 };

const char* variant_name(OramVariant v);
/// Accepts "naive", "tree", "recursive". Throws std::invalid_argument otherwise.
OramVariant parse_variant(std::string_view name);

inline constexpr std::size_t kStashCapacity = 64;
/// A position-map level at or below this many bytes is kept as one ciphertext.
inline constexpr std::size_t kInlineMapBytes = 256;
inline constexpr std::uint32_t kUnassignedLeaf = 0xffffffffU;

struct OramConfig {
  OramVariant variant = OramVariant::kNaive;
  std::uint32_t capacity = 1;
  std::uint16_t bucket_size = 4;
  std::uint16_t recursion_factor = 16;
  bool periodic = false;

  /// Throws std::invalid_argument.
  void validate() const;
  std::size_t payload_size() const { return record_size(periodic); }
  bool operator==(const OramConfig&) const = default;
};

struct OramKey {
  AeKey ae;
  OramConfig config;
  bool operator==(const OramKey&) const = default;
};

struct NaiveStore {
  Bytes ciphertext;
  bool operator==(const NaiveStore&) const = default;
};

/// One Path ORAM tree. Buckets are heap-indexed (root 0, children 2i+1, 2i+2).
struct TreeStore {
  std::uint32_t block_count = 0;
  std::uint32_t leaf_count = 0;
  std::uint16_t payload_size = 0;
  Bytes stash;
  std::vector<Bytes> buckets;

  std::uint32_t depth() const;
  bool operator==(const TreeStore&) const = default;
};

/// trees[0] holds the records; trees[k] holds the position map of trees[k-1];
/// root_map holds the position map of trees.back().
struct TreeForest {
  std::vector<TreeStore> trees;
  std::uint32_t root_entries = 0;
  Bytes root_map;
  bool operator==(const TreeForest&) const = default;
};

struct EncryptedDatabase {
  static constexpr std::uint8_t kVersion = 1;
  OramConfig config;
  std::variant<NaiveStore, TreeForest> store;
  bool operator==(const EncryptedDatabase&) const = default;
};

struct TransferStats {
  std::uint64_t bytes_to_client = 0;
  std::uint64_t bytes_to_server = 0;
  std::uint64_t server_ops = 0;

  std::uint64_t total_bytes() const { return bytes_to_client + bytes_to_server; }
  bool operator==(const TransferStats&) const = default;
};

/// A request as seen by the server: frame type plus the path coordinates for
/// path requests (tree 0, leaf 0 otherwise).
struct ObservedRequest {
  FrameType type{};
  std::uint8_t tree = 0;
  std::uint32_t leaf = 0;
  bool operator==(const ObservedRequest&) const = default;
};

/// Fatal: the persisted stash cannot hold the blocks left after eviction.
class StashOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::pair<OramKey, EncryptedDatabase> oram_init(const OramConfig& config, RandomSource& rng);

/// Number of position-map trees the recursive variant builds above the data
/// tree for a given capacity and fan-in.
std::size_t recursion_levels(std::uint32_t capacity, std::uint16_t recursion_factor);

/// Untrusted host of the encrypted database. Answers client frames, stores
/// returned ciphertexts verbatim, and counts transferred bytes.
class OramServer {
 public:
  explicit OramServer(EncryptedDatabase db);

  /// One request/response step. Malformed requests yield a kError frame and
  /// leave the database unchanged.
  Frame serve(const Frame& request);

  /// Held by a client for the duration of one read or write.
  std::unique_lock<std::mutex> acquire_session() { return std::unique_lock(session_mutex_); }

  TransferStats transfer_report() const;
  void reset_stats();

  const std::vector<ObservedRequest>& access_log() const { return log_; }
  void clear_access_log() { log_.clear(); }

  const EncryptedDatabase& database() const { return db_; }
  /// Direct handle for adversarial tampering and rollback.
  EncryptedDatabase& mutable_database() { return db_; }
  EncryptedDatabase snapshot() const { return db_; }
  void restore(EncryptedDatabase db) { db_ = std::move(db); }

 private:
  Frame handle(const Frame& request);

  EncryptedDatabase db_;
  TransferStats stats_;
  std::vector<ObservedRequest> log_;
  std::mutex session_mutex_;
};

/// Client-side view of a request/response link to the server.
class OramChannel {
 public:
  virtual ~OramChannel() = default;
  virtual Frame exchange(const Frame& request) = 0;
  /// Exclusive access for one ORAM operation; empty lock if not applicable.
  virtual std::unique_lock<std::mutex> open_session() { return {}; }
};

class DirectChannel final : public OramChannel {
 public:
  explicit DirectChannel(OramServer& server) : server_(server) {}
  Frame exchange(const Frame& request) override { return server_.serve(request); }
  std::unique_lock<std::mutex> open_session() override { return server_.acquire_session(); }

 private:
  OramServer& server_;
};

/// Frames over a pair of file descriptors; pair with serve_stream on the other end.
class FdChannel final : public OramChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  Frame exchange(const Frame& request) override;

 private:
  int read_fd_;
  int write_fd_;
};

/// Serves frames read from in_fd until EOF.
void serve_stream(OramServer& server, int in_fd, int out_fd);

/// Wraps another channel and keeps a copy of every frame.
class RecordingChannel final : public OramChannel {
 public:
  explicit RecordingChannel(OramChannel& inner) : inner_(inner) {}
  Frame exchange(const Frame& request) override;
  std::unique_lock<std::mutex> open_session() override { return inner_.open_session(); }
  const Transcript& transcript() const { return transcript_; }
  void clear() { transcript_.clear(); }

 private:
  OramChannel& inner_;
  Transcript transcript_;
};

class OramClient {
 public:
  OramClient(OramKey key, RandomPtr rng);

  /// Throws std::out_of_range before any interaction if b >= capacity.
  /// nullopt on any integrity failure; in that case nothing is stored.
  std::optional<HouseholdRecord> read(OramChannel& channel, std::uint32_t block);
  bool write(OramChannel& channel, std::uint32_t block, const HouseholdRecord& rec);

  const OramKey& key() const { return key_; }

 private:
  /// Reads block `block`, optionally replacing its payload. Returns the old payload.
  std::optional<Bytes> access(OramChannel& channel, std::uint32_t block, const Bytes* replacement);
  std::optional<Bytes> access_naive(OramChannel& channel, std::uint32_t block, const Bytes* replacement);
  std::optional<Bytes> access_tree(OramChannel& channel, std::uint32_t block, const Bytes* replacement);

  OramKey key_;
  RandomPtr rng_;
};

namespace oram_detail {

Bytes root_aad();
Bytes naive_aad();
Bytes stash_aad(std::uint8_t tree);
Bytes bucket_aad(std::uint8_t tree, std::uint8_t level, std::uint32_t index);
/// Heap indices of the buckets from the root down to `leaf`.
std::vector<std::uint32_t> path_indices(std::uint32_t depth, std::uint32_t leaf);
std::size_t slot_size(std::uint16_t payload_size);
/// Shapes of the trees oram_init builds for a config.
std::vector<TreeStore> tree_shapes(const OramConfig& config);

}  // namespace oram_detail

}  // namespace aidwallet
