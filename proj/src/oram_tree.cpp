#include <algorithm>

#include "aidwallet/oram.hpp"

namespace aidwallet {

using namespace oram_detail;

namespace {

struct Block {
  std::uint32_t id;
  std::uint32_t leaf;
  Bytes payload;
};

void parse_slots(ByteView plain, std::size_t slot, std::vector<Block>& out) {
  for (std::size_t off = 0; off + slot <= plain.size(); off += slot) {
    ByteReader r(plain.subspan(off, slot));
    if (r.u8() == 0) continue;
    Block b;
    b.id = r.u32();
    b.leaf = r.u32();
    ByteView p = r.take(slot - 9);
    b.payload.assign(p.begin(), p.end());
    out.push_back(std::move(b));
  }
}

void append_slot(Bytes& out, const Block& b) {
  put_u8(out, 1);
  put_u32(out, b.id);
  put_u32(out, b.leaf);
  put_bytes(out, b.payload);
}

std::uint32_t load_u32(const Bytes& buf, std::size_t offset) {
  ByteReader r(ByteView(buf).subspan(offset, 4));
  return r.u32();
}

void store_u32(Bytes& buf, std::size_t offset, std::uint32_t v) {
  buf[offset] = static_cast<std::uint8_t>(v >> 24);
  buf[offset + 1] = static_cast<std::uint8_t>(v >> 16);
  buf[offset + 2] = static_cast<std::uint8_t>(v >> 8);
  buf[offset + 3] = static_cast<std::uint8_t>(v);
}

}  // namespace

std::optional<Bytes> OramClient::access_tree(OramChannel& channel, std::uint32_t block, const Bytes* replacement) {
  const OramConfig& cfg = key_.config;
  const auto shapes = tree_shapes(cfg);
  const std::size_t tree_count = shapes.size();
  const std::uint32_t fanout = cfg.recursion_factor;
  const std::size_t z = cfg.bucket_size;

  // Block index per tree: idx[0] is the record, idx[k] the map block holding idx[k-1].
  std::vector<std::uint32_t> idx(tree_count);
  idx[0] = block;
  for (std::size_t k = 1; k < tree_count; ++k) idx[k] = idx[k - 1] / fanout;

  Frame root_frame = channel.exchange(Frame{FrameType::kFetchRoot, {}});
  if (root_frame.type != FrameType::kRoot) return std::nullopt;
  auto root = ae::open(key_.ae, root_frame.payload, root_aad());
  const std::uint32_t root_entries = shapes.back().block_count;
  if (!root || root->size() != static_cast<std::size_t>(root_entries) * 4) return std::nullopt;

  const std::size_t top = tree_count - 1;
  std::uint32_t assigned = load_u32(*root, static_cast<std::size_t>(idx[top]) * 4);
  std::uint32_t next_leaf = static_cast<std::uint32_t>(rng_->uniform(shapes[top].leaf_count));
  store_u32(*root, static_cast<std::size_t>(idx[top]) * 4, next_leaf);

  std::vector<Frame> stores;
  std::optional<Bytes> result;

  for (std::size_t k = tree_count; k-- > 0;) {
    const TreeStore& shape = shapes[k];
    const std::uint32_t depth = shape.depth();
    const std::size_t slot = slot_size(shape.payload_size);
    const auto tree_id = static_cast<std::uint8_t>(k);

    if (assigned != kUnassignedLeaf && assigned >= shape.leaf_count) return std::nullopt;
    const std::uint32_t leaf =
        assigned == kUnassignedLeaf ? static_cast<std::uint32_t>(rng_->uniform(shape.leaf_count)) : assigned;

    Bytes request;
    put_u8(request, tree_id);
    put_u32(request, leaf);
    Frame path_frame = channel.exchange(Frame{FrameType::kFetchPath, std::move(request)});
    if (path_frame.type != FrameType::kPath) return std::nullopt;

    const auto path = path_indices(depth, leaf);
    std::vector<Block> working;
    ByteReader reader(path_frame.payload);
    auto stash = ae::open(key_.ae, reader.blob(), stash_aad(tree_id));
    if (!stash || stash->size() != kStashCapacity * slot) return std::nullopt;
    parse_slots(*stash, slot, working);
    for (std::uint32_t level = 0; level <= depth; ++level) {
      auto bucket = ae::open(key_.ae, reader.blob(), bucket_aad(tree_id, static_cast<std::uint8_t>(level), path[level]));
      if (!bucket || bucket->size() != z * slot) return std::nullopt;
      parse_slots(*bucket, slot, working);
    }
    reader.expect_done();

    auto found = std::find_if(working.begin(), working.end(), [&](const Block& b) { return b.id == idx[k]; });
    Bytes payload;
    if (found != working.end()) {
      payload = std::move(found->payload);
      working.erase(found);
    } else if (assigned != kUnassignedLeaf) {
      // The map says this block exists but its path does not hold it.
      return std::nullopt;
    } else {
      payload.assign(shape.payload_size, k == 0 ? 0x00 : 0xff);
    }

    std::uint32_t child_assigned = kUnassignedLeaf;
    std::uint32_t child_leaf = 0;
    if (k > 0) {
      const std::size_t offset = static_cast<std::size_t>(idx[k - 1] - idx[k] * fanout) * 4;
      child_assigned = load_u32(payload, offset);
      child_leaf = static_cast<std::uint32_t>(rng_->uniform(shapes[k - 1].leaf_count));
      store_u32(payload, offset, child_leaf);
    } else {
      result = payload;
      if (replacement != nullptr) payload = *replacement;
    }
    working.push_back(Block{idx[k], next_leaf, std::move(payload)});

    // Greedy eviction from the leaf upwards.
    std::vector<Bytes> bucket_plain(depth + 1);
    for (std::uint32_t level = depth + 1; level-- > 0;) {
      const std::uint32_t shift = depth - level;
      std::size_t placed = 0;
      for (auto it = working.begin(); it != working.end() && placed < z;) {
        if ((it->leaf >> shift) == (leaf >> shift)) {
          append_slot(bucket_plain[level], *it);
          it = working.erase(it);
          ++placed;
        } else {
          ++it;
        }
      }
      bucket_plain[level].resize(z * slot, 0);
    }
    if (working.size() > kStashCapacity) {
      throw StashOverflow("ORAM stash overflow in tree " + std::to_string(k));
    }
    Bytes stash_plain;
    for (const auto& b : working) append_slot(stash_plain, b);
    stash_plain.resize(kStashCapacity * slot, 0);

    Bytes store;
    put_u8(store, tree_id);
    put_u32(store, leaf);
    put_blob(store, ae::seal(key_.ae, stash_plain, *rng_, stash_aad(tree_id)));
    for (std::uint32_t level = 0; level <= depth; ++level) {
      put_blob(store, ae::seal(key_.ae, bucket_plain[level], *rng_,
                               bucket_aad(tree_id, static_cast<std::uint8_t>(level), path[level])));
    }
    stores.push_back(Frame{FrameType::kStorePath, std::move(store)});

    assigned = child_assigned;
    next_leaf = child_leaf;
  }

  // Every fetched ciphertext verified; only now write anything back.
  Frame ack = channel.exchange(Frame{FrameType::kStoreRoot, ae::seal(key_.ae, *root, *rng_, root_aad())});
  if (ack.type != FrameType::kAck) return std::nullopt;
  for (const auto& f : stores) {
    if (channel.exchange(f).type != FrameType::kAck) return std::nullopt;
  }
  return result;
}

}  // namespace aidwallet
