#include <gtest/gtest.h>

#include "test_support.hpp"

namespace aidwallet::harness {
namespace {

using aidwallet::testing::seeded;

World make_world(std::uint64_t seed = 1) { return World({OramVariant::kNaive, 16}, seeded(seed)); }

TEST(World, HonestRegistrationAndSpendBookkeeping) {
  World w = make_world();
  const auto ids = w.o_hreg(100, 2);
  ASSERT_EQ(ids.size(), 2U);
  EXPECT_TRUE(w.is_honest(ids[0]));
  EXPECT_EQ(w.household_of(ids[0]), w.household_of(ids[1]));
  EXPECT_EQ(w.cards_of(*w.household_of(ids[0])), ids);
  EXPECT_EQ(w.malicious_budget(), 0U);

  EXPECT_TRUE(w.o_spend(1, ids[0], 30));
  EXPECT_TRUE(w.o_spend(1, ids[1], 50));
  EXPECT_FALSE(w.o_spend(1, ids[0], 30));
  EXPECT_EQ(w.received_sum(1), 80U);
  EXPECT_EQ(w.spent_sum(1), 80U);
  EXPECT_EQ(w.received_proofs(1).size(), 2U);
  EXPECT_EQ(w.received_sum(2), 0U);
  EXPECT_THROW(w.o_spend(1, 999, 1), std::out_of_range);
}

TEST(World, MaliciousVendorOracleRespectsBlocking) {
  World w = make_world();
  const auto ids = w.o_hreg(100, 1);
  {
    auto t = adversary_terminal(w.db(), 20, 4);
    auto r = w.o_spend_mal_vendor(4, ids[0], 20, *t);
    ASSERT_TRUE(r.has_value());
    EXPECT_TRUE(r->success());
    ASSERT_EQ(t->received().size(), 1U);
    EXPECT_EQ(t->received()[0].type, FrameType::kProof);
  }
  EXPECT_EQ(w.spent_sum(4), 20U);
  EXPECT_EQ(w.received_sum(4), 0U);

  w.block({ids[0]});
  auto blocked = adversary_terminal(w.db(), 20, 4);
  EXPECT_FALSE(w.o_spend_mal_vendor(4, ids[0], 20, *blocked).has_value());
  EXPECT_FALSE(w.o_spend_mal_vendor(4, 12345, 20, *blocked).has_value());
  w.unblock();

  // A price the card was not asked to pay is not counted as spent.
  auto lying = adversary_terminal(w.db(), 25, 4);
  auto r = w.o_spend_mal_vendor(4, ids[0], 20, *lying);
  ASSERT_TRUE(r.has_value());
  EXPECT_FALSE(r->success());
  EXPECT_EQ(w.spent_sum(4), 20U);
}

TEST(World, MaliciousUserRegistrationHidesSecret) {
  World w = make_world();
  Transcript transcript;
  const auto id = w.o_mal_user_reg(
      70,
      [](CardTerminal& t) {
        EXPECT_TRUE(decode_register_id(t.receive()).has_value());
        const Frame secret = t.receive();
        EXPECT_EQ(secret.type, FrameType::kRegisterSecret);
        for (auto b : secret.payload) EXPECT_EQ(b, 0);
        t.receive();
        t.send(Frame{FrameType::kRegisterDone, {}});
      },
      &transcript);
  ASSERT_TRUE(id.has_value());
  EXPECT_EQ(w.malicious_budget(), 70U);
  EXPECT_FALSE(transcript.empty());
}

TEST(World, ForgedSpendAfterMaliciousRegistrationIsRejected) {
  World w = make_world();
  ASSERT_TRUE(w.o_mal_user_reg(70, [](CardTerminal& t) {
    for (int i = 0; i < 3; ++i) t.receive();
    t.send(Frame{FrameType::kRegisterDone, {}});
  }));
  SeededRandom rng(9);
  const auto self = ds::keygen(rng);
  const bool accepted = w.o_spend_mal_user(1, 500, [&](CardTerminal& t) {
    const auto a = decode_announcement(t.receive());
    ASSERT_TRUE(a.has_value());
    TransactionProof p;
    p.r = pedersen::random_opening(rng);
    p.com = pedersen::commit(pedersen::setup(), a->price, p.r);
    p.tau = rng.bytes<16>();
    p.sigma = ds::sign(self.secret, spend_message(p.tau, a->epoch, p.com), rng);
    t.send(encode_proof(p));
  });
  EXPECT_FALSE(accepted);
  EXPECT_EQ(w.received_sum(1), 0U);
}

TEST(World, CuriousStationTranscriptAndIds) {
  World w = make_world();
  Transcript transcript;
  const auto ids = w.o_cstation_reg({1001, 1002}, 50, &transcript);
  EXPECT_EQ(ids, (std::vector<CardId>{1001, 1002}));
  EXPECT_FALSE(transcript.empty());
  EXPECT_TRUE(w.o_spend(1, 1002, 50));
  EXPECT_FALSE(w.o_spend(1, 1001, 1));
}

TEST(SplitWorld, SidesShareKeysButNotState) {
  SplitWorld sw({OramVariant::kNaive, 8}, seeded(2));
  const auto a = sw.o_reg(0, 100, 1);
  const auto b = sw.o_reg(1, 100, 1);
  EXPECT_TRUE(sw.o_spend(0, 3, a[0], 60));
  EXPECT_TRUE(sw.o_spend(1, 3, b[0], 60));
  EXPECT_FALSE(sw.o_spend(0, 3, a[0], 60));
  ASSERT_EQ(sw.received(0, 3).size(), 1U);
  ASSERT_EQ(sw.received(1, 3).size(), 1U);
  TagLedger ledger;
  for (int side : {0, 1}) {
    const auto proof = create_reclaim_proof(3, sw.received(side, 3));
    EXPECT_EQ(check_reclaim_proof(sw.rs_public(), 3, 60, proof, ledger), ReclaimVerdict::kAccepted);
  }
}

TEST(Experiments, NamesAndCsv) {
  EXPECT_EQ(parse_experiment("IND"), ExperimentId::kInd);
  EXPECT_FALSE(parse_experiment("XYZ").has_value());
  EXPECT_STREQ(experiment_name(ExperimentId::kAudp), "AUDP");
  EXPECT_EQ(results_header(), "experiment,strategy,trials,valid,wins,aborts,accepted,violations,advantage,threshold,seed,passed");
  ExperimentResult r;
  r.experiment = "SEC";
  r.strategy = "x";
  r.trials = 3;
  r.valid = 3;
  r.seed = 7;
  r.passed = true;
  EXPECT_EQ(results_row(r), "SEC,x,3,3,0,0,0,0,0.000000,0.000000,7,pass");
}

TEST(Experiments, DeterministicForSeed) {
  ExperimentConfig config;
  config.trials = 12;
  config.seed = 5;
  config.threads = 1;
  const Strategy* s = find_strategy("honest-baseline");
  ASSERT_NE(s, nullptr);
  for (auto id : {ExperimentId::kSec, ExperimentId::kInd, ExperimentId::kAudp}) {
    auto a = run_experiment(id, *s, config);
    config.threads = 3;
    auto b = run_experiment(id, *s, config);
    config.threads = 1;
    ASSERT_TRUE(a && b);
    EXPECT_EQ(results_row(*a), results_row(*b));
  }
}

TEST(Experiments, EveryStrategyFailsToOverspendOrOverclaim) {
  ExperimentConfig config;
  config.trials = 10;
  config.seed = 11;
  EXPECT_EQ(shipped_strategies().size(), 9U);
  for (const auto& s : shipped_strategies()) {
    for (auto id : {ExperimentId::kSec, ExperimentId::kRecl}) {
      auto r = run_experiment(id, s, config);
      ASSERT_TRUE(r.has_value()) << s.id;
      EXPECT_EQ(r->wins, 0U) << experiment_name(id) << " " << s.id;
      EXPECT_TRUE(r->passed) << results_row(*r);
    }
  }
}

TEST(Experiments, RewindIsAlwaysCaught) {
  ExperimentConfig config;
  config.trials = 10;
  const Strategy* s = find_strategy("db-rewind");
  ASSERT_NE(s, nullptr);
  EXPECT_TRUE(s->rewinds);
  auto r = run_experiment(ExperimentId::kInd, *s, config);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->violations, r->valid);
  EXPECT_TRUE(r->passed);
}

TEST(Experiments, UnequalCountProbeAlwaysAborts) {
  ExperimentConfig config;
  config.trials = 10;
  auto r = run_experiment(ExperimentId::kAudp, unequal_count_probe(), config);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->aborts, 10U);
  EXPECT_EQ(r->valid, 0U);
  EXPECT_TRUE(r->passed);
  EXPECT_FALSE(run_experiment(ExperimentId::kSec, unequal_count_probe(), config).has_value());
}

}  // namespace
}  // namespace aidwallet::harness
