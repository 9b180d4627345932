#include "aidwallet/db_file.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

namespace aidwallet {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'A', 'W', 'D', 'B'};

}  // namespace

Bytes serialize_database(const EncryptedDatabase& db) {
  Bytes out(kMagic.begin(), kMagic.end());
  put_u8(out, EncryptedDatabase::kVersion);
  const OramConfig& c = db.config;
  put_u8(out, static_cast<std::uint8_t>(c.variant));
  put_u32(out, c.capacity);
  put_u16(out, c.bucket_size);
  put_u16(out, c.recursion_factor);
  put_u8(out, c.periodic ? 1 : 0);

  if (const auto* naive = std::get_if<NaiveStore>(&db.store)) {
    put_blob(out, naive->ciphertext);
    return out;
  }
  const auto& forest = std::get<TreeForest>(db.store);
  put_u8(out, static_cast<std::uint8_t>(forest.trees.size()));
  for (const auto& t : forest.trees) {
    put_u32(out, t.block_count);
    put_u32(out, t.leaf_count);
    put_u16(out, t.payload_size);
    put_blob(out, t.stash);
    put_u32(out, static_cast<std::uint32_t>(t.buckets.size()));
    for (const auto& b : t.buckets) put_blob(out, b);
  }
  put_u32(out, forest.root_entries);
  put_blob(out, forest.root_map);
  return out;
}

EncryptedDatabase parse_database(ByteView bytes) {
  ByteReader r(bytes);
  if (r.array<4>() != kMagic) throw DecodeError("not a database file");
  const std::uint8_t version = r.u8();
  if (version != EncryptedDatabase::kVersion) throw DecodeError("unsupported database version");

  EncryptedDatabase db;
  OramConfig& c = db.config;
  const std::uint8_t variant = r.u8();
  if (variant > static_cast<std::uint8_t>(OramVariant::kRecursive)) throw DecodeError("unknown ORAM variant");
  c.variant = static_cast<OramVariant>(variant);
  c.capacity = r.u32();
  c.bucket_size = r.u16();
  c.recursion_factor = r.u16();
  const std::uint8_t periodic = r.u8();
  if (periodic > 1) throw DecodeError("bad periodic flag");
  c.periodic = periodic == 1;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DecodeError(e.what());
  }

  if (c.variant == OramVariant::kNaive) {
    ByteView ct = r.blob();
    db.store = NaiveStore{Bytes(ct.begin(), ct.end())};
    r.expect_done();
    return db;
  }

  const auto shapes = oram_detail::tree_shapes(c);
  TreeForest forest;
  const std::uint8_t tree_count = r.u8();
  if (tree_count != shapes.size()) throw DecodeError("tree count does not match config");
  for (std::size_t i = 0; i < tree_count; ++i) {
    TreeStore t;
    t.block_count = r.u32();
    t.leaf_count = r.u32();
    t.payload_size = r.u16();
    if (t.block_count != shapes[i].block_count || t.leaf_count != shapes[i].leaf_count ||
        t.payload_size != shapes[i].payload_size) {
      throw DecodeError("tree shape does not match config");
    }
    ByteView stash = r.blob();
    t.stash.assign(stash.begin(), stash.end());
    const std::uint32_t bucket_count = r.u32();
    if (bucket_count != 2 * t.leaf_count - 1) throw DecodeError("bucket count does not match tree");
    t.buckets.reserve(bucket_count);
    for (std::uint32_t b = 0; b < bucket_count; ++b) {
      ByteView ct = r.blob();
      t.buckets.emplace_back(ct.begin(), ct.end());
    }
    forest.trees.push_back(std::move(t));
  }
  forest.root_entries = r.u32();
  if (forest.root_entries != shapes.back().block_count) throw DecodeError("root map size does not match config");
  ByteView root = r.blob();
  forest.root_map.assign(root.begin(), root.end());
  r.expect_done();
  db.store = std::move(forest);
  return db;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, ByteView data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void db_store(const std::filesystem::path& path, const EncryptedDatabase& db) {
  write_file_atomic(path, serialize_database(db));
}

EncryptedDatabase db_load(const std::filesystem::path& path) { return parse_database(read_file(path)); }

}  // namespace aidwallet
