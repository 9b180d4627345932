#include "aidwallet/oram.hpp"

#include <bit>
#include <string>

namespace aidwallet {

using namespace oram_detail;

const char* variant_name(OramVariant v) {
  switch (v) {
    case OramVariant::kNaive:
      return "naive";
    case OramVariant::kTree:
      return "tree";
    case OramVariant::kRecursive:
      return "recursive";
  }
  return "unknown";
}

OramVariant parse_variant(std::string_view name) {
  if (name == "naive") return OramVariant::kNaive;
  if (name == "tree") return OramVariant::kTree;
  if (name == "recursive" || name == "recursive-tree") return OramVariant::kRecursive;
  throw std::invalid_argument("unknown ORAM variant: " + std::string(name));
}

void OramConfig::validate() const {
  if (variant != OramVariant::kNaive && variant != OramVariant::kTree && variant != OramVariant::kRecursive) {
    throw std::invalid_argument("unknown ORAM variant");
  }
  if (capacity < 1) throw std::invalid_argument("capacity must be at least 1");
  if (capacity > (1U << 30)) throw std::invalid_argument("capacity too large");
  if (bucket_size < 1) throw std::invalid_argument("bucket_size must be at least 1");
  if (recursion_factor < 2) throw std::invalid_argument("recursion_factor must be at least 2");
}

std::uint32_t TreeStore::depth() const { return static_cast<std::uint32_t>(std::countr_zero(leaf_count)); }

namespace oram_detail {

Bytes root_aad() { return Bytes{'R'}; }
Bytes naive_aad() { return Bytes{'N'}; }

Bytes stash_aad(std::uint8_t tree) { return Bytes{'S', tree}; }

Bytes bucket_aad(std::uint8_t tree, std::uint8_t level, std::uint32_t index) {
  Bytes out{'B', tree, level};
  put_u32(out, index);
  return out;
}

std::vector<std::uint32_t> path_indices(std::uint32_t depth, std::uint32_t leaf) {
  std::vector<std::uint32_t> out(depth + 1);
  for (std::uint32_t level = 0; level <= depth; ++level) {
    out[level] = ((1U << level) - 1) + (leaf >> (depth - level));
  }
  return out;
}

std::size_t slot_size(std::uint16_t payload_size) { return 1 + 4 + 4 + payload_size; }

std::vector<TreeStore> tree_shapes(const OramConfig& config) {
  std::vector<TreeStore> trees;
  auto add = [&](std::uint32_t blocks, std::size_t payload) {
    TreeStore t;
    t.block_count = blocks;
    t.leaf_count = std::bit_ceil(blocks);
    t.payload_size = static_cast<std::uint16_t>(payload);
    trees.push_back(std::move(t));
  };
  add(config.capacity, config.payload_size());
  if (config.variant == OramVariant::kRecursive) {
    std::uint32_t entries = config.capacity;
    while (static_cast<std::size_t>(entries) * 4 > kInlineMapBytes) {
      entries = (entries + config.recursion_factor - 1) / config.recursion_factor;
      add(entries, static_cast<std::size_t>(config.recursion_factor) * 4);
    }
  }
  return trees;
}

}  // namespace oram_detail

std::size_t recursion_levels(std::uint32_t capacity, std::uint16_t recursion_factor) {
  OramConfig c;
  c.variant = OramVariant::kRecursive;
  c.capacity = capacity;
  c.recursion_factor = recursion_factor;
  c.validate();
  return tree_shapes(c).size() - 1;
}

std::pair<OramKey, EncryptedDatabase> oram_init(const OramConfig& config, RandomSource& rng) {
  config.validate();
  OramKey key{AeKey::generate(rng), config};
  EncryptedDatabase db;
  db.config = config;

  if (config.variant == OramVariant::kNaive) {
    Bytes plain(static_cast<std::size_t>(config.capacity) * config.payload_size(), 0);
    db.store = NaiveStore{ae::seal(key.ae, plain, rng, naive_aad())};
    return {key, db};
  }

  TreeForest forest;
  forest.trees = tree_shapes(config);
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    TreeStore& tree = forest.trees[t];
    const std::size_t slot = slot_size(tree.payload_size);
    const auto tree_id = static_cast<std::uint8_t>(t);
    tree.stash = ae::seal(key.ae, Bytes(kStashCapacity * slot, 0), rng, stash_aad(tree_id));
    const Bytes empty_bucket(config.bucket_size * slot, 0);
    const std::uint32_t bucket_count = 2 * tree.leaf_count - 1;
    tree.buckets.reserve(bucket_count);
    for (std::uint32_t i = 0; i < bucket_count; ++i) {
      auto level = static_cast<std::uint8_t>(std::bit_width(i + 1) - 1);
      tree.buckets.push_back(ae::seal(key.ae, empty_bucket, rng, bucket_aad(tree_id, level, i)));
    }
  }
  forest.root_entries = forest.trees.back().block_count;
  forest.root_map = ae::seal(key.ae, Bytes(static_cast<std::size_t>(forest.root_entries) * 4, 0xff), rng, root_aad());
  db.store = std::move(forest);
  return {key, db};
}

// ---------------------------------------------------------------------------
// Server

OramServer::OramServer(EncryptedDatabase db) : db_(std::move(db)) {}

TransferStats OramServer::transfer_report() const { return stats_; }

void OramServer::reset_stats() { stats_ = {}; }

Frame OramServer::serve(const Frame& request) {
  Frame response;
  try {
    response = handle(request);
  } catch (const DecodeError& e) {
    response = Frame{FrameType::kError, Bytes(e.what(), e.what() + std::char_traits<char>::length(e.what()))};
  }
  stats_.bytes_to_server += request.wire_size();
  stats_.bytes_to_client += response.wire_size();
  stats_.server_ops += 1;
  return response;
}

namespace {

Frame error_frame(std::string_view msg) { return Frame{FrameType::kError, Bytes(msg.begin(), msg.end())}; }

Frame bytes_frame(FrameType type, const Bytes& payload) { return Frame{type, payload}; }

}  // namespace

Frame OramServer::handle(const Frame& request) {
  ObservedRequest seen{request.type, 0, 0};
  const bool naive = std::holds_alternative<NaiveStore>(db_.store);

  switch (request.type) {
    case FrameType::kFetchDatabase:
    case FrameType::kStoreDatabase: {
      if (!naive) return error_frame("not a naive database");
      log_.push_back(seen);
      auto& store = std::get<NaiveStore>(db_.store);
      if (request.type == FrameType::kFetchDatabase) {
        if (!request.payload.empty()) throw DecodeError("unexpected payload");
        return bytes_frame(FrameType::kDatabase, store.ciphertext);
      }
      if (request.payload.size() != store.ciphertext.size()) throw DecodeError("database length mismatch");
      store.ciphertext = request.payload;
      return Frame{FrameType::kAck, {}};
    }
    case FrameType::kFetchRoot:
    case FrameType::kStoreRoot: {
      if (naive) return error_frame("not a tree database");
      log_.push_back(seen);
      auto& forest = std::get<TreeForest>(db_.store);
      if (request.type == FrameType::kFetchRoot) {
        if (!request.payload.empty()) throw DecodeError("unexpected payload");
        return bytes_frame(FrameType::kRoot, forest.root_map);
      }
      if (request.payload.size() != forest.root_map.size()) throw DecodeError("root length mismatch");
      forest.root_map = request.payload;
      return Frame{FrameType::kAck, {}};
    }
    case FrameType::kFetchPath:
    case FrameType::kStorePath: {
      if (naive) return error_frame("not a tree database");
      auto& forest = std::get<TreeForest>(db_.store);
      ByteReader r(request.payload);
      const std::uint8_t tree_id = r.u8();
      const std::uint32_t leaf = r.u32();
      if (tree_id >= forest.trees.size()) throw DecodeError("tree index out of range");
      TreeStore& tree = forest.trees[tree_id];
      if (leaf >= tree.leaf_count) throw DecodeError("leaf out of range");
      const auto path = oram_detail::path_indices(tree.depth(), leaf);
      seen.tree = tree_id;
      seen.leaf = leaf;

      if (request.type == FrameType::kFetchPath) {
        r.expect_done();
        log_.push_back(seen);
        Bytes out;
        put_blob(out, tree.stash);
        for (auto idx : path) put_blob(out, tree.buckets[idx]);
        return Frame{FrameType::kPath, std::move(out)};
      }

      // Parse everything before touching storage.
      ByteView stash = r.blob();
      if (stash.size() != tree.stash.size()) throw DecodeError("stash length mismatch");
      std::vector<ByteView> buckets;
      for (auto idx : path) {
        ByteView b = r.blob();
        if (b.size() != tree.buckets[idx].size()) throw DecodeError("bucket length mismatch");
        buckets.push_back(b);
      }
      r.expect_done();
      log_.push_back(seen);
      tree.stash.assign(stash.begin(), stash.end());
      for (std::size_t i = 0; i < path.size(); ++i) tree.buckets[path[i]].assign(buckets[i].begin(), buckets[i].end());
      return Frame{FrameType::kAck, {}};
    }
    default:
      return error_frame("unsupported request");
  }
}

// ---------------------------------------------------------------------------
// Channels

Frame FdChannel::exchange(const Frame& request) {
  write_frame(write_fd_, request);
  auto response = read_frame(read_fd_);
  if (!response) throw DecodeError("server closed the channel");
  return *response;
}

void serve_stream(OramServer& server, int in_fd, int out_fd) {
  while (auto request = read_frame(in_fd)) write_frame(out_fd, server.serve(*request));
}

Frame RecordingChannel::exchange(const Frame& request) {
  transcript_.push_back({Direction::kToServer, request});
  Frame response = inner_.exchange(request);
  transcript_.push_back({Direction::kToClient, response});
  return response;
}

// ---------------------------------------------------------------------------
// Client

OramClient::OramClient(OramKey key, RandomPtr rng) : key_(std::move(key)), rng_(std::move(rng)) {
  key_.config.validate();
  if (!rng_) throw std::invalid_argument("OramClient needs a randomness source");
}

std::optional<Bytes> OramClient::access(OramChannel& channel, std::uint32_t block, const Bytes* replacement) {
  if (block >= key_.config.capacity) throw std::out_of_range("ORAM block index out of range");
  if (replacement != nullptr && replacement->size() != key_.config.payload_size()) {
    throw std::invalid_argument("payload has wrong size");
  }
  auto session = channel.open_session();
  try {
    if (key_.config.variant == OramVariant::kNaive) return access_naive(channel, block, replacement);
    return access_tree(channel, block, replacement);
  } catch (const DecodeError&) {
    // Malformed server response.
    return std::nullopt;
  }
}

std::optional<HouseholdRecord> OramClient::read(OramChannel& channel, std::uint32_t block) {
  auto payload = access(channel, block, nullptr);
  if (!payload) return std::nullopt;
  return decode_record(*payload, key_.config.periodic);
}

bool OramClient::write(OramChannel& channel, std::uint32_t block, const HouseholdRecord& rec) {
  Bytes payload = encode_record(rec, key_.config.periodic);
  return access(channel, block, &payload).has_value();
}

}  // namespace aidwallet
