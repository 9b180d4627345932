#include <gtest/gtest.h>
#include <unistd.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <thread>

#include "aidwallet/db_file.hpp"
#include "test_support.hpp"

namespace aidwallet {

void PrintTo(OramVariant v, std::ostream* os) { *os << variant_name(v); }

namespace {

using testing::seeded;

struct Fixture {
  Fixture(OramConfig config, std::uint64_t seed) : rng(seeded(seed)) {
    auto [k, db] = oram_init(config, *rng);
    key = k;
    server = std::make_unique<OramServer>(std::move(db));
    channel = std::make_unique<DirectChannel>(*server);
    client = std::make_unique<OramClient>(key, rng);
  }
  RandomPtr rng;
  OramKey key;
  std::unique_ptr<OramServer> server;
  std::unique_ptr<DirectChannel> channel;
  std::unique_ptr<OramClient> client;
};

const OramVariant kVariants[] = {OramVariant::kNaive, OramVariant::kTree, OramVariant::kRecursive};

class OramVariantTest : public ::testing::TestWithParam<OramVariant> {};

INSTANTIATE_TEST_SUITE_P(AllVariants, OramVariantTest, ::testing::ValuesIn(kVariants),
                         [](const auto& info) { return std::string(variant_name(info.param)); });

TEST_P(OramVariantTest, FreshDatabaseReadsZero) {
  Fixture f({GetParam(), 8}, 1);
  for (std::uint32_t b = 0; b < 8; ++b) EXPECT_EQ(f.client->read(*f.channel, b), HouseholdRecord{});
}

TEST_P(OramVariantTest, WriteReadIsolationLastWins) {
  Fixture f({GetParam(), 8}, 2);
  ASSERT_TRUE(f.client->write(*f.channel, 3, {70, 3}));
  EXPECT_EQ(f.client->read(*f.channel, 3), (HouseholdRecord{70, 3}));
  ASSERT_TRUE(f.client->write(*f.channel, 0, {100, 1}));
  EXPECT_EQ(f.client->read(*f.channel, 1), HouseholdRecord{});
  ASSERT_TRUE(f.client->write(*f.channel, 0, {90, 2}));
  EXPECT_EQ(f.client->read(*f.channel, 0), (HouseholdRecord{90, 2}));
}

TEST_P(OramVariantTest, OutOfRangeThrowsBeforeInteraction) {
  Fixture f({GetParam(), 8}, 3);
  f.server->reset_stats();
  EXPECT_THROW(f.client->read(*f.channel, 8), std::out_of_range);
  EXPECT_THROW(f.client->write(*f.channel, 100, {}), std::out_of_range);
  EXPECT_EQ(f.server->transfer_report(), TransferStats{});
}

TEST_P(OramVariantTest, MatchesMapOracle) {
  for (std::uint32_t n : {1U, 7U, 64U, 1024U}) {
    Fixture f({GetParam(), n}, 4 + n);
    SeededRandom ops(40 + n);
    std::map<std::uint32_t, HouseholdRecord> oracle;
    for (int i = 0; i < 1000; ++i) {
      const auto b = static_cast<std::uint32_t>(ops.uniform(n));
      if (ops.coin()) {
        HouseholdRecord rec{static_cast<Amount>(ops.uniform(65536)), static_cast<Counter>(ops.uniform(65536))};
        ASSERT_TRUE(f.client->write(*f.channel, b, rec));
        oracle[b] = rec;
      } else {
        auto got = f.client->read(*f.channel, b);
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(*got, oracle.count(b) ? oracle[b] : HouseholdRecord{}) << "n=" << n << " op " << i;
      }
    }
  }
}

TEST_P(OramVariantTest, PeriodicRecordsRoundTrip) {
  OramConfig config{GetParam(), 16};
  config.periodic = true;
  Fixture f(config, 5);
  ASSERT_TRUE(f.client->write(*f.channel, 9, {10, 4, 2}));
  EXPECT_EQ(f.client->read(*f.channel, 9), (HouseholdRecord{10, 4, 2}));
}

TEST_P(OramVariantTest, TranscriptShapeIndependentOfBlock) {
  Fixture f({GetParam(), 32}, 6);
  std::optional<std::vector<FrameShape>> reference;
  for (std::uint32_t b = 0; b < 32; ++b) {
    for (bool write : {false, true}) {
      RecordingChannel rec(*f.channel);
      if (write) {
        ASSERT_TRUE(f.client->write(rec, b, {static_cast<Amount>(b), 1}));
      } else {
        ASSERT_TRUE(f.client->read(rec, b).has_value());
      }
      const auto shape = shape_of(rec.transcript());
      if (!reference) reference = shape;
      EXPECT_EQ(shape, *reference) << "block " << b << (write ? " write" : " read");
    }
  }
}

TEST_P(OramVariantTest, SingleBitFlipDetectedOnNextAffectedAccess) {
  Fixture f({GetParam(), 16}, 7);
  SeededRandom mut(70);
  for (int trial = 0; trial < 40; ++trial) {
    EncryptedDatabase& db = f.server->mutable_database();
    Bytes* target = nullptr;
    std::optional<std::pair<std::uint8_t, std::uint32_t>> bucket;  // tree, heap index
    if (auto* naive = std::get_if<NaiveStore>(&db.store)) {
      target = &naive->ciphertext;
    } else {
      auto& forest = std::get<TreeForest>(db.store);
      const auto t = static_cast<std::uint8_t>(mut.uniform(forest.trees.size()));
      const auto pick = mut.uniform(forest.trees[t].buckets.size() + 2);
      if (pick == 0) {
        target = &forest.root_map;
      } else if (pick == 1) {
        target = &forest.trees[t].stash;
      } else {
        const auto idx = static_cast<std::uint32_t>(pick - 2);
        target = &forest.trees[t].buckets[idx];
        bucket = {t, idx};
      }
    }
    const Bytes original = *target;
    (*target)[mut.uniform(target->size())] ^= static_cast<std::uint8_t>(1U << mut.uniform(8));

    bool detected = false;
    for (int access = 0; access < 5000 && !detected; ++access) {
      f.server->clear_access_log();
      const auto got = f.client->read(*f.channel, static_cast<std::uint32_t>(mut.uniform(16)));
      bool touched = !bucket.has_value();
      for (const auto& seen : f.server->access_log()) {
        if (bucket && seen.type == FrameType::kFetchPath && seen.tree == bucket->first) {
          const auto& tree = std::get<TreeForest>(f.server->database().store).trees[seen.tree];
          for (auto idx : oram_detail::path_indices(tree.depth(), seen.leaf)) touched = touched || idx == bucket->second;
        }
      }
      if (touched) {
        EXPECT_FALSE(got.has_value()) << "trial " << trial;
        detected = true;
      } else {
        ASSERT_TRUE(got.has_value());
      }
    }
    EXPECT_TRUE(detected);
    // Undo: the read stored nothing, so the flipped ciphertext is still there.
    EncryptedDatabase& again = f.server->mutable_database();
    if (auto* naive = std::get_if<NaiveStore>(&again.store)) {
      naive->ciphertext = original;
    } else {
      *target = original;
    }
    ASSERT_TRUE(f.client->read(*f.channel, 0).has_value());
  }
}

TEST_P(OramVariantTest, SwappedBucketsOrReplayedStoreDetected) {
  if (GetParam() == OramVariant::kNaive) {
    // A stale but authentic naive ciphertext is a consistent rollback, which
    // the ORAM does not claim to detect; an AAD from another role is.
    Fixture f({GetParam(), 8}, 8);
    auto& ct = std::get<NaiveStore>(f.server->mutable_database().store).ciphertext;
    Bytes foreign = ae::seal(f.key.ae, Bytes(ct.size() - ae::kIvSize - ae::kTagSize - 16, 0), *f.rng, as_view("X"));
    ASSERT_EQ(foreign.size(), ct.size());
    ct = foreign;
    EXPECT_FALSE(f.client->read(*f.channel, 0).has_value());
    return;
  }
  Fixture f({GetParam(), 16}, 8);
  auto& forest = std::get<TreeForest>(f.server->mutable_database().store);
  std::swap(forest.trees[0].buckets[1], forest.trees[0].buckets[2]);
  bool failed = false;
  for (int i = 0; i < 64 && !failed; ++i) failed = !f.client->read(*f.channel, static_cast<std::uint32_t>(i % 16));
  EXPECT_TRUE(failed);
}

// ---------------------------------------------------------------------------

TEST(OramTree, LeavesUniformForFixedBlock) {
  Fixture f({OramVariant::kTree, 256}, 9);
  constexpr int kAccesses = 5000;
  std::vector<int> counts(256, 0);
  for (int i = 0; i < kAccesses; ++i) {
    f.server->clear_access_log();
    ASSERT_TRUE(f.client->read(*f.channel, 17).has_value());
    for (const auto& seen : f.server->access_log()) {
      if (seen.type == FrameType::kFetchPath && seen.tree == 0) ++counts[seen.leaf];
    }
  }
  const double expected = kAccesses / 256.0;
  double stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(255), stat));
  EXPECT_GT(p, 0.01);
}

TEST(OramTree, RecursiveMapFitsInline) {
  for (std::uint32_t n : {1U, 64U, 65U, 1024U, 32768U, 65536U}) {
    SeededRandom rng(n);
    auto [key, db] = oram_init({OramVariant::kRecursive, n}, rng);
    const auto& forest = std::get<TreeForest>(db.store);
    EXPECT_EQ(forest.trees.size(), 1 + recursion_levels(n, 16)) << n;
    EXPECT_LE(forest.root_entries * 4, kInlineMapBytes) << n;
    EXPECT_EQ(forest.trees[0].block_count, n);
    for (const auto& t : forest.trees) EXPECT_EQ(t.leaf_count, std::bit_ceil(t.block_count));
  }
  EXPECT_EQ(recursion_levels(64, 16), 0U);
  EXPECT_EQ(recursion_levels(65, 16), 1U);
  EXPECT_EQ(recursion_levels(32768, 16), 3U);  // 2048, 128, then 8 map blocks
}

TEST(OramTree, StashOverflowIsFatal) {
  // One slot per bucket cannot keep up: the persisted stash fills.
  OramConfig config{OramVariant::kTree, 512};
  config.bucket_size = 1;
  Fixture f(config, 10);
  SeededRandom ops(11);
  EXPECT_THROW(
      {
        for (int i = 0; i < 20000; ++i) f.client->write(*f.channel, static_cast<std::uint32_t>(ops.uniform(512)), {1, 1});
      },
      StashOverflow);
}

TEST(OramConfig, Validation) {
  EXPECT_THROW((OramConfig{OramVariant::kTree, 0}).validate(), std::invalid_argument);
  OramConfig bad_bucket{OramVariant::kTree, 8};
  bad_bucket.bucket_size = 0;
  EXPECT_THROW(bad_bucket.validate(), std::invalid_argument);
  OramConfig bad_factor{OramVariant::kRecursive, 8};
  bad_factor.recursion_factor = 1;
  EXPECT_THROW(bad_factor.validate(), std::invalid_argument);
  EXPECT_NO_THROW((OramConfig{OramVariant::kNaive, 1}).validate());
  EXPECT_EQ(parse_variant("recursive"), OramVariant::kRecursive);
  EXPECT_THROW(parse_variant("avl"), std::invalid_argument);
}

TEST(OramNaive, InitSizesAndTransfer) {
  SeededRandom rng(12);
  auto [key, db] = oram_init({OramVariant::kNaive, 8}, rng);
  const auto& ct = std::get<NaiveStore>(db.store).ciphertext;
  EXPECT_EQ(ct.size(), ae::sealed_size(32));
  EXPECT_EQ(ae::open(key.ae, ct, oram_detail::naive_aad()), Bytes(32, 0));

  auto [key15, db15] = oram_init({OramVariant::kNaive, 1U << 15}, rng);
  const auto plain = ae::open(key15.ae, std::get<NaiveStore>(db15.store).ciphertext, oram_detail::naive_aad());
  ASSERT_TRUE(plain.has_value());
  EXPECT_EQ(plain->size(), 131072U);

  OramServer server(std::move(db15));
  DirectChannel channel(server);
  OramClient client(key15, std::make_shared<SeededRandom>(13));
  EXPECT_EQ(server.transfer_report(), TransferStats{});
  ASSERT_TRUE(client.read(channel, 5).has_value());
  ASSERT_TRUE(client.write(channel, 5, {1, 1}));
  const auto stats = server.transfer_report();
  EXPECT_GE(stats.bytes_to_client, 2U * 131072U);
  EXPECT_GE(stats.bytes_to_server, 2U * 131072U);
  EXPECT_EQ(stats.server_ops, 4U);
  server.reset_stats();
  EXPECT_EQ(server.transfer_report(), TransferStats{});
}

TEST(OramCost, RecursiveCheaperThanNaiveAtTwoToFifteen) {
  auto cost = [](OramVariant v) {
    Fixture f({v, 1U << 15}, 14);
    f.server->reset_stats();
    f.client->read(*f.channel, 99);
    f.client->write(*f.channel, 99, {1, 1});
    return f.server->transfer_report().total_bytes();
  };
  EXPECT_LT(cost(OramVariant::kRecursive), cost(OramVariant::kNaive));
}

// ---------------------------------------------------------------------------
// Server robustness

class ServerRobustness : public ::testing::TestWithParam<OramVariant> {};
INSTANTIATE_TEST_SUITE_P(AllVariants, ServerRobustness, ::testing::ValuesIn(kVariants),
                         [](const auto& info) { return std::string(variant_name(info.param)); });

TEST_P(ServerRobustness, MalformedRequestsLeaveDatabaseUnchanged) {
  SeededRandom rng(15);
  auto [key, db] = oram_init({GetParam(), 16}, rng);
  OramServer server(db);
  const std::vector<Frame> bad = {
      {FrameType::kStoreDatabase, Bytes(3, 0)},
      {FrameType::kFetchDatabase, Bytes(1, 0)},
      {FrameType::kStoreRoot, Bytes(5, 0)},
      {FrameType::kFetchRoot, Bytes(2, 0)},
      {FrameType::kFetchPath, Bytes{0, 0, 0}},
      {FrameType::kFetchPath, Bytes{9, 0, 0, 0, 0}},
      {FrameType::kFetchPath, Bytes{0, 0xff, 0xff, 0xff, 0xff}},
      {FrameType::kStorePath, Bytes{0, 0, 0, 0, 0, 0, 0, 0, 1, 0xaa}},
      {FrameType::kAck, {}},
      {FrameType::kProof, Bytes(145, 0)},
  };
  for (const auto& f : bad) {
    const Frame r = server.serve(f);
    EXPECT_EQ(r.type, FrameType::kError) << static_cast<int>(f.type);
    EXPECT_EQ(server.database(), db);
  }
  // Store with every length right except the last bucket.
  if (GetParam() != OramVariant::kNaive) {
    const auto& tree = std::get<TreeForest>(db.store).trees[0];
    Bytes payload;
    put_u8(payload, 0);
    put_u32(payload, 0);
    put_blob(payload, tree.stash);
    const auto path = oram_detail::path_indices(tree.depth(), 0);
    for (std::size_t i = 0; i < path.size(); ++i) {
      Bytes b = tree.buckets[path[i]];
      if (i + 1 == path.size()) b.pop_back();
      put_blob(payload, b);
    }
    EXPECT_EQ(server.serve({FrameType::kStorePath, payload}).type, FrameType::kError);
    EXPECT_EQ(server.database(), db);
  }
}

TEST(Server, NoMessagesNoChange) {
  SeededRandom rng(16);
  auto [key, db] = oram_init({OramVariant::kTree, 8}, rng);
  OramServer server(db);
  EXPECT_EQ(server.database(), db);
  EXPECT_EQ(server.transfer_report(), TransferStats{});
}

// ---------------------------------------------------------------------------
// File descriptor transport

TEST(FdChannel, ClientAndServerOverPipes) {
  for (OramVariant v : kVariants) {
    SeededRandom rng(17);
    auto [key, db] = oram_init({v, 16}, rng);
    OramServer server(std::move(db));
    int to_server[2];
    int to_client[2];
    ASSERT_EQ(pipe(to_server), 0);
    ASSERT_EQ(pipe(to_client), 0);
    std::thread host([&] {
      serve_stream(server, to_server[0], to_client[1]);
      close(to_client[1]);
    });
    {
      FdChannel channel(to_client[0], to_server[1]);
      OramClient client(key, std::make_shared<SeededRandom>(18));
      ASSERT_TRUE(client.write(channel, 4, {321, 7}));
      EXPECT_EQ(client.read(channel, 4), (HouseholdRecord{321, 7}));
      EXPECT_EQ(client.read(channel, 5), HouseholdRecord{});
    }
    close(to_server[1]);
    host.join();
    close(to_server[0]);
    close(to_client[0]);
    EXPECT_GT(server.transfer_report().server_ops, 0U);
  }
}

// ---------------------------------------------------------------------------
// Database file

TEST(DbFile, RoundTripIsByteExact) {
  for (OramVariant v : kVariants) {
    Fixture f({v, 16}, 19);
    f.client->write(*f.channel, 2, {5, 1});
    const Bytes bytes = serialize_database(f.server->database());
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AWDB");
    EXPECT_EQ(bytes[4], EncryptedDatabase::kVersion);
    EXPECT_EQ(bytes[5], static_cast<std::uint8_t>(v));
    const EncryptedDatabase parsed = parse_database(bytes);
    EXPECT_EQ(parsed, f.server->database());
    EXPECT_EQ(serialize_database(parsed), bytes);

    const auto path = std::filesystem::path(::testing::TempDir()) / ("db_" + std::string(variant_name(v)) + ".awdb");
    db_store(path, f.server->database());
    EXPECT_EQ(read_file(path), bytes);
    EXPECT_EQ(db_load(path), f.server->database());
  }
}

TEST(DbFile, RejectsBadVersionMagicAndShape) {
  Fixture f({OramVariant::kTree, 16}, 20);
  const Bytes good = serialize_database(f.server->database());
  Bytes bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(parse_database(bad_version), DecodeError);
  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_database(bad_magic), DecodeError);
  EXPECT_THROW(parse_database(ByteView(good).first(good.size() - 1)), DecodeError);
  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(parse_database(trailing), DecodeError);
  Bytes bad_capacity = good;
  bad_capacity[9] = 17;  // capacity u32 low byte: shapes no longer match
  EXPECT_THROW(parse_database(bad_capacity), DecodeError);
  EXPECT_THROW(db_load(std::filesystem::path(::testing::TempDir()) / "missing.awdb"), std::exception);
}

TEST(DbFile, RestoredSnapshotIsReadable) {
  Fixture f({OramVariant::kRecursive, 16}, 21);
  f.client->write(*f.channel, 1, {10, 1});
  const Bytes snap = serialize_database(f.server->database());
  f.client->write(*f.channel, 1, {5, 2});
  f.server->restore(parse_database(snap));
  EXPECT_EQ(f.client->read(*f.channel, 1), (HouseholdRecord{10, 1}));
}

}  // namespace
}  // namespace aidwallet
