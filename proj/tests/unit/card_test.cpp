#include <gtest/gtest.h>

#include <functional>

#include "aidwallet/db_file.hpp"
#include "test_support.hpp"

namespace aidwallet {
namespace {

using testing::Deployment;

/// Forwards to another terminal, recording everything and optionally
/// answering ORAM requests itself.
class Wrap final : public CardTerminal {
 public:
  explicit Wrap(CardTerminal& inner) : inner_(inner) {}
  Frame receive() override {
    Frame f = inner_.receive();
    transcript.push_back({Direction::kToClient, f});
    return f;
  }
  void send(const Frame& f) override {
    transcript.push_back({Direction::kToServer, f});
    if (on_send) on_send(f);
    inner_.send(f);
  }
  std::unique_lock<std::mutex> open_session() override { return inner_.open_session(); }
  Frame exchange(const Frame& request) override {
    transcript.push_back({Direction::kToServer, request});
    Frame r;
    if (intercept) r = intercept(request);
    if (r.type == FrameType{}) r = inner_.exchange(request);
    transcript.push_back({Direction::kToClient, r});
    return r;
  }
  std::function<Frame(const Frame&)> intercept;
  std::function<void(const Frame&)> on_send;
  Transcript transcript;

 private:
  CardTerminal& inner_;
};

TEST(CardRegistration, WritesBudgetWithZeroCounter) {
  Deployment d({OramVariant::kTree, 16});
  Card card = d.new_card();
  auto session = d.station.allocate(500);
  EXPECT_EQ(card.request(*session), CardStatus::kSuccess);
  EXPECT_EQ(session->household(), 0U);
  EXPECT_EQ(card.state().household, 0U);
  EXPECT_EQ(card.state().last_ctr_written, Counter{0});
  EXPECT_EQ(card.state().rs_secret->d, d.rs.secret.d);
  EXPECT_EQ(d.record(0), (HouseholdRecord{500, 0}));
  ASSERT_FALSE(session->received().empty());
  EXPECT_EQ(session->received().back().type, FrameType::kRegisterDone);
  EXPECT_EQ(card.request(*d.station.allocate(500)), CardStatus::kAlreadyRegistered);
}

TEST(CardRegistration, BadSecretAbortsWithoutWrite) {
  Deployment d({OramVariant::kTree, 16});
  const auto other = ds::keygen(*d.rng);
  for (const SigningSecret& bad : {SigningSecret{}, other.secret, SigningSecret{Scalar{group::order_bytes()}}}) {
    Card card = d.new_card();
    d.server.reset_stats();
    ScriptedTerminal t(d.channel, {encode_register_id(0), encode_register_secret(bad), encode_register_budget({500})});
    EXPECT_EQ(card.request(t), CardStatus::kBadKey);
    EXPECT_FALSE(card.state().registered());
    EXPECT_FALSE(card.state().last_ctr_written.has_value());
    ASSERT_EQ(t.received().size(), 1U);
    EXPECT_EQ(t.received()[0].type, FrameType::kRegisterAbort);
    EXPECT_EQ(d.server.transfer_report().server_ops, 0U);
  }
  EXPECT_EQ(d.station.next_id(), 0U);
}

TEST(CardRegistration, MalformedFramesAbort) {
  Deployment d({OramVariant::kNaive, 4});
  Card card = d.new_card();
  ScriptedTerminal no_id(d.channel, {Frame{FrameType::kRegisterId, {1}}});
  EXPECT_EQ(card.request(no_id), CardStatus::kProtocolError);
  ScriptedTerminal out_of_range(d.channel, {encode_register_id(4), encode_register_secret(d.rs.secret),
                                            encode_register_budget({500})});
  EXPECT_EQ(card.request(out_of_range), CardStatus::kProtocolError);
  EXPECT_FALSE(card.state().registered());
  Card locked = d.new_card();
  locked.set_unlocked(false);
  EXPECT_EQ(locked.request(*d.station.allocate(5)), CardStatus::kLocked);
}

TEST(CardSpend, BalanceExamples) {
  Deployment d({OramVariant::kRecursive, 16});
  auto cards = d.household(500, 1);
  EXPECT_EQ(d.spend(*cards[0], 30).status, CardStatus::kSuccess);
  EXPECT_EQ(d.record(0), (HouseholdRecord{470, 1}));

  auto small = d.household(100, 1);
  auto fail = d.spend(*small[0], 101);
  EXPECT_EQ(fail.status, CardStatus::kInsufficientBalance);
  EXPECT_EQ(d.record(1), (HouseholdRecord{100, 0}));
  auto ok = d.spend(*small[0], 100);
  EXPECT_TRUE(ok.success());
  EXPECT_EQ(ok.price, 100);
  EXPECT_EQ(ok.epoch, 1U);
  EXPECT_EQ(d.record(1), (HouseholdRecord{0, 1}));
  EXPECT_EQ(d.spend(*small[0], 1).status, CardStatus::kInsufficientBalance);
  EXPECT_TRUE(d.spend(*small[0], 0).success());
  EXPECT_EQ(d.record(1), (HouseholdRecord{0, 2}));
}

TEST(CardSpend, ProofVerifiesAndVendorLedgerGrows) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 1);
  auto session = d.vendor.receive(7, 30);
  ASSERT_TRUE(cards[0]->spend(30, *session).success());
  ASSERT_TRUE(session->accepted());
  const auto& p = *session->proof();
  EXPECT_EQ(check_transaction_proof(d.rs.public_key, 7, 30, p), ReceiveStatus::kAccepted);
  EXPECT_EQ(p.tau, prf::eval(d.setup.sk_t.prf_key, tag_input(0, 1)));
  EXPECT_EQ(p.com, pedersen::commit(pedersen::setup(), 30, p.r));
  EXPECT_EQ(d.vendor.ledger(7).entries.size(), 1U);
  EXPECT_EQ(d.vendor.ledger(7).entries[0].spent, 30);
}

TEST(CardSpend, UnregisteredAndLockedDoNothing) {
  Deployment d({OramVariant::kTree, 16});
  Card card = d.new_card();
  d.server.reset_stats();
  auto session = d.vendor.receive(1, 5);
  EXPECT_EQ(card.spend(5, *session).status, CardStatus::kNotRegistered);
  EXPECT_EQ(session->status(), ReceiveStatus::kNoResponse);

  auto cards = d.household(50, 1);
  cards[0]->set_unlocked(false);
  d.server.reset_stats();
  EXPECT_EQ(d.spend(*cards[0], 5).status, CardStatus::kLocked);
  EXPECT_EQ(d.server.transfer_report().server_ops, 0U);
  cards[0]->set_unlocked(true);
  EXPECT_TRUE(d.spend(*cards[0], 5).success());
}

TEST(CardSpend, PriceMismatchAbortsBeforeOram) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 1);
  d.server.reset_stats();
  auto session = d.vendor.receive(1, 40);
  auto r = cards[0]->spend(30, *session);
  EXPECT_EQ(r.status, CardStatus::kProtocolError);
  EXPECT_EQ(r.price, 40);
  EXPECT_EQ(session->status(), ReceiveStatus::kCardAborted);
  EXPECT_EQ(d.server.transfer_report().server_ops, 0U);
  EXPECT_EQ(d.record(0), (HouseholdRecord{500, 0}));
}

TEST(CardSpend, NoProofWithoutSuccessfulWrite) {
  for (OramVariant v : {OramVariant::kNaive, OramVariant::kTree, OramVariant::kRecursive}) {
    Deployment d({v, 16});
    auto cards = d.household(500, 1);
    auto session = d.vendor.receive(1, 30);
    Wrap t(*session);
    t.intercept = [](const Frame& req) {
      const bool store = req.type == FrameType::kStoreDatabase || req.type == FrameType::kStorePath ||
                         req.type == FrameType::kStoreRoot;
      return store ? Frame{FrameType::kError, {}} : Frame{};
    };
    EXPECT_EQ(cards[0]->spend(30, t).status, CardStatus::kIntegrityFailure);
    EXPECT_EQ(session->status(), ReceiveStatus::kCardAborted);
    EXPECT_FALSE(session->proof().has_value());
    EXPECT_EQ(cards[0]->state().last_ctr_written, Counter{0});
    for (const auto& e : t.transcript) EXPECT_NE(e.frame.type, FrameType::kProof);
  }
}

TEST(CardSpend, StatePersistedBeforeProofLeaves) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 1);
  const auto path = std::filesystem::path(::testing::TempDir()) / "card_persist.awcs";
  cards[0]->attach_state_file(path);
  auto session = d.vendor.receive(1, 30);
  Wrap t(*session);
  bool checked = false;
  t.on_send = [&](const Frame& f) {
    if (f.type != FrameType::kProof) return;
    EXPECT_EQ(parse_card_state(read_file(path)).last_ctr_written, Counter{1});
    checked = true;
  };
  ASSERT_TRUE(cards[0]->spend(30, t).success());
  EXPECT_TRUE(checked);
  Card reloaded = Card::load(path, d.rng);
  EXPECT_EQ(reloaded.state(), cards[0]->state());
  EXPECT_TRUE(d.spend(reloaded, 10).success());
  EXPECT_EQ(d.record(0), (HouseholdRecord{460, 2}));
}

TEST(CardRollback, DetectedByWriterAndLatched) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 2);
  const EncryptedDatabase snap = d.server.snapshot();
  ASSERT_TRUE(d.spend(*cards[0], 30).success());
  d.server.restore(snap);
  EXPECT_EQ(d.spend(*cards[0], 30).status, CardStatus::kRollbackDetected);
  EXPECT_TRUE(cards[0]->state().violation);
  EXPECT_EQ(d.spend(*cards[0], 1).status, CardStatus::kViolation);
  // The sibling never wrote, so it has no watermark to compare against.
  EXPECT_TRUE(d.spend(*cards[1], 30).success());
  EXPECT_EQ(d.spend(*cards[0], 1).status, CardStatus::kViolation);
  EXPECT_EQ(cards[0]->request(*d.station.allocate(1)), CardStatus::kViolation);
}

TEST(CardRollback, DetectRollbackRule) {
  CardState st;
  EXPECT_FALSE(detect_rollback(st, 0));
  st.last_ctr_written = 5;
  EXPECT_FALSE(detect_rollback(st, 5));
  EXPECT_FALSE(detect_rollback(st, 9));
  EXPECT_TRUE(detect_rollback(st, 4));
}

TEST(CardRollback, IntegrityFailureIsNotViolation) {
  Deployment d({OramVariant::kNaive, 4});
  auto cards = d.household(500, 1);
  auto& ct = std::get<NaiveStore>(d.server.mutable_database().store).ciphertext;
  ct[20] ^= 1;
  EXPECT_EQ(d.spend(*cards[0], 1).status, CardStatus::kIntegrityFailure);
  EXPECT_FALSE(cards[0]->state().violation);
  ct[20] ^= 1;
  EXPECT_TRUE(d.spend(*cards[0], 1).success());
}

TEST(CardRetire, CounterCeiling) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 2);
  OramClient trusted(d.setup.sk_t.oram_key, d.rng);
  ASSERT_TRUE(trusted.write(d.channel, 0, {500, 0xfffe}));
  // cards[1] has no watermark; cards[0]'s watermark is 0.
  EXPECT_TRUE(d.spend(*cards[0], 10).success());
  EXPECT_EQ(d.record(0), (HouseholdRecord{490, 0xffff}));
  EXPECT_EQ(d.spend(*cards[1], 10).status, CardStatus::kRetired);
  EXPECT_TRUE(cards[1]->state().retired);
  EXPECT_EQ(d.spend(*cards[0], 10).status, CardStatus::kRetired);
  EXPECT_EQ(d.spend(*cards[0], 10).status, CardStatus::kRetired);
  EXPECT_EQ(d.record(0), (HouseholdRecord{490, 0xffff}));
}

TEST(CardTranscript, ShapeIndependentOfHouseholdAndPrice) {
  for (OramVariant v : {OramVariant::kNaive, OramVariant::kTree, OramVariant::kRecursive}) {
    Deployment d({v, 16});
    auto a = d.household(500, 1);
    auto b = d.household(20, 1);
    std::optional<std::vector<FrameShape>> reference;
    for (auto [card, price] : {std::pair{a[0].get(), Amount{30}}, std::pair{b[0].get(), Amount{7}},
                               std::pair{a[0].get(), Amount{65}}}) {
      auto session = d.vendor.receive(3, price);
      Wrap t(*session);
      ASSERT_TRUE(card->spend(price, t).success());
      const auto shape = shape_of(t.transcript);
      if (!reference) reference = shape;
      EXPECT_EQ(shape, *reference) << variant_name(v);
    }
  }
}

TEST(CardRunningBalance, AccumulatesAndReclaimsOnce) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 2);
  for (auto [i, price] : {std::pair{0, Amount{30}}, std::pair{1, Amount{20}}, std::pair{0, Amount{5}}}) {
    auto session = d.vendor.receive_running_balance(4, price);
    auto r = cards[static_cast<std::size_t>(i)]->spend_running_balance(price, *session);
    ASSERT_TRUE(r.success());
    ASSERT_TRUE(session->accepted());
  }
  const auto record = d.vendor.running_balance(4);
  ASSERT_TRUE(record.has_value());
  EXPECT_EQ(record->balance, 55U);
  EXPECT_EQ(d.record(0), (HouseholdRecord{445, 3}));

  ReclaimStation station(d.rs.public_key);
  EXPECT_EQ(station.verify_running_balance(4, *record), 55U);
  EXPECT_FALSE(station.verify_running_balance(4, *record).has_value());
  EXPECT_FALSE(station.verify_running_balance(5, *record).has_value());
}

TEST(CardRunningBalance, RejectsForgedIncomingBalance) {
  Deployment d({OramVariant::kTree, 16});
  auto cards = d.household(500, 1);
  SignedBalance forged{1000, {}, {}};
  ScriptedTerminal t(d.channel, {encode_announcement({10, 1}), encode_vendor_balance(forged)});
  EXPECT_EQ(cards[0]->spend_running_balance(10, t).status, CardStatus::kBadSignature);
  EXPECT_EQ(d.record(0), (HouseholdRecord{500, 0}));
}

TEST(CardPeriod, ApplyPeriodUpdateExamples) {
  const PeriodPolicy reset{TopUpRule::kResetToAllowance, 500};
  const PeriodPolicy add{TopUpRule::kAddAllowance, 490};
  EXPECT_EQ(apply_period_update({10, 4, 2}, 3, reset), (HouseholdRecord{500, 4, 3}));
  EXPECT_EQ(apply_period_update({10, 4, 2}, 9, reset), (HouseholdRecord{500, 4, 9}));
  EXPECT_EQ(apply_period_update({10, 4, 2}, 3, add), (HouseholdRecord{500, 4, 3}));
  EXPECT_EQ(apply_period_update({10, 4, 2}, 5, add), (HouseholdRecord{1480, 4, 5}));
  EXPECT_EQ(apply_period_update({10, 4, 2}, 2, add), (HouseholdRecord{10, 4, 2}));
  EXPECT_EQ(apply_period_update({10, 4, 2}, 1, reset), (HouseholdRecord{10, 4, 2}));
  EXPECT_EQ(apply_period_update({1000, 0, 0}, 0xffff, {TopUpRule::kAddAllowance, 65000}),
            (HouseholdRecord{0xffff, 0, 0xffff}));
}

TEST(CardPeriod, SpendAppliesTopUp) {
  OramConfig config{OramVariant::kRecursive, 8};
  config.periodic = true;
  Deployment d(config, 3, PeriodPolicy{TopUpRule::kResetToAllowance, 100});
  auto cards = d.household(100, 1, 1);
  EXPECT_TRUE(d.spend(*cards[0], 80, 1).success());
  EXPECT_EQ(d.record(0), (HouseholdRecord{20, 1, 1}));
  EXPECT_EQ(d.spend(*cards[0], 30, 1).status, CardStatus::kInsufficientBalance);
  EXPECT_TRUE(d.spend(*cards[0], 30, 2).success());
  EXPECT_EQ(d.record(0), (HouseholdRecord{70, 2, 2}));
  EXPECT_EQ(d.spend(*cards[0], 1, 70000).status, CardStatus::kProtocolError);
}

TEST(CardState, FileRoundTripAndErrors) {
  Deployment d({OramVariant::kRecursive, 16}, 1, PeriodPolicy{TopUpRule::kAddAllowance, 7});
  auto cards = d.household(500, 1);
  d.spend(*cards[0], 1);
  const Bytes bytes = serialize_card_state(cards[0]->state());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AWCS");
  EXPECT_EQ(bytes[4], CardState::kVersion);
  EXPECT_EQ(parse_card_state(bytes), cards[0]->state());
  const Bytes fresh = serialize_card_state(d.new_card().state());
  EXPECT_EQ(parse_card_state(fresh), d.new_card().state());

  Bytes bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(parse_card_state(bad), DecodeError);
  EXPECT_THROW(parse_card_state(ByteView(bytes).first(bytes.size() - 1)), DecodeError);
  Bytes longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(parse_card_state(longer), DecodeError);
}

}  // namespace
}  // namespace aidwallet
