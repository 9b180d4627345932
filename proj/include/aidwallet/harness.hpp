#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "aidwallet/reclaim.hpp"

namespace aidwallet::harness {

using CardId = std::uint32_t;

/// Records every frame crossing a card terminal. Direction is from the card's
/// point of view: kToServer leaves the card, kToClient reaches it.
class RecordingTerminal final : public CardTerminal {
 public:
  explicit RecordingTerminal(CardTerminal& inner) : inner_(inner) {}

  Frame receive() override;
  void send(const Frame& frame) override;
  Frame exchange(const Frame& request) override;
  std::unique_lock<std::mutex> open_session() override { return inner_.open_session(); }

  const Transcript& transcript() const { return transcript_; }

 private:
  CardTerminal& inner_;
  Transcript transcript_;
};

/// Authenticated link with an adversary in the middle. Every frame passes
/// through `tamper`; a modified frame is detected and replaced by kError, so
/// the adversary can relay but not alter.
class TamperEvidentRelay final : public CardTerminal {
 public:
  using Tamper = std::function<Frame(const Frame&)>;
  TamperEvidentRelay(CardTerminal& vendor_side, Tamper tamper);

  Frame receive() override;
  void send(const Frame& frame) override;
  Frame exchange(const Frame& request) override;
  std::unique_lock<std::mutex> open_session() override { return vendor_.open_session(); }

  bool tampered() const { return tampered_; }

 private:
  Frame pass(const Frame& f);

  CardTerminal& vendor_;
  Tamper tamper_;
  bool tampered_ = false;
};

/// A vendor-side terminal the adversary controls: announces (price, ε),
/// relays ORAM traffic to the database it hosts, keeps what the card sends.
std::unique_ptr<ScriptedTerminal> adversary_terminal(OramChannel& db, Amount price, Epoch epoch);

/// One deployment: trusted setup, registration station, honest vendor, shared
/// database, plus the bookkeeping of the registration and spend oracles.
class World {
 public:
  World(const OramConfig& config, RandomPtr rng);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  std::vector<CardId> o_hreg(Amount bud, std::uint32_t t_nb);
  /// The adversary plays the card against an honest station. Returns the
  /// household id if the adversary confirmed the registration.
  std::optional<HouseholdId> o_mal_user_reg(Amount bud, const std::function<void(CardTerminal&)>& adversary,
                                            Transcript* transcript = nullptr);
  /// Honest card, curious station: the full transcript goes to the adversary.
  std::vector<CardId> o_cstation_reg(const std::vector<CardId>& chosen_ids, Amount bud, Transcript* transcript);

  /// Honest card, honest vendor. Throws std::out_of_range for an unknown card.
  bool o_spend(Epoch epoch, CardId card, Amount price);
  /// The adversary plays the card against the honest vendor.
  bool o_spend_mal_user(Epoch epoch, Amount amount, const std::function<void(CardTerminal&)>& adversary);
  /// The adversary plays the vendor against an honest card. Returns nullopt
  /// when the card is unknown or blocked.
  std::optional<SpendResult> o_spend_mal_vendor(Epoch epoch, CardId card, Amount amount, CardTerminal& terminal);

  std::optional<HouseholdId> household_of(CardId card) const;
  std::vector<CardId> cards_of(HouseholdId household) const;
  Card& card(CardId id) { return *cards_.at(id); }
  bool is_honest(CardId id) const { return honest_.count(id) != 0; }

  std::uint64_t received_sum(Epoch epoch) const;
  std::uint64_t spent_sum(Epoch epoch) const;
  std::uint64_t malicious_budget() const;
  const std::vector<LedgerEntry>& received_proofs(Epoch epoch);

  void block(const std::set<CardId>& ids) { blocked_ = ids; }
  void unblock() { blocked_.clear(); }

  RandomSource& rng() { return *rng_; }
  RandomPtr rng_ptr() { return rng_; }
  OramServer& server() { return *server_; }
  OramChannel& db() { return *db_channel_; }
  Vendor& vendor() { return *vendor_; }
  const SigningKeyPair& rs_keys() const { return rs_keys_; }
  const TrustedSecret& trusted_secret() const { return setup_.sk_t; }

 private:
  CardId add_card(const Card& prototype);

  RandomPtr rng_;
  TrustedSetupOutput setup_;
  SigningKeyPair rs_keys_;
  std::unique_ptr<OramServer> server_;
  std::unique_ptr<DirectChannel> db_channel_;
  std::unique_ptr<RegistrationStation> station_;
  std::unique_ptr<Vendor> vendor_;

  std::map<HouseholdId, Amount> bud_;
  std::map<CardId, std::unique_ptr<Card>> cards_;
  std::set<CardId> honest_;
  std::set<HouseholdId> malicious_;
  std::set<CardId> blocked_;
  std::map<Epoch, std::vector<Amount>> received_;
  std::map<Epoch, std::vector<Amount>> spent_;
  std::map<Epoch, std::vector<LedgerEntry>> received_proofs_;
  CardId counter_ = 0;
};

// ---------------------------------------------------------------------------
// Adversaries

/// Overspending: run against a world, return ε*.
using SecAdversary = std::function<Epoch(World&, RandomSource&)>;

struct ReclaimClaim {
  Epoch epoch = 0;
  std::uint64_t spent_sum = 0;
  ReclaimProof proof;
};

/// Over-reclaim: run against a world, return the claim (nullopt gives up).
using ReclAdversary = std::function<std::optional<ReclaimClaim>(World&, RandomSource&)>;

struct IndChallenge {
  CardId t0 = 0;
  CardId t1 = 0;
  Amount price = 0;
  Epoch epoch = 0;
};

class IndAdversary {
 public:
  virtual ~IndAdversary() = default;
  virtual IndChallenge choose(World& w, RandomSource& rng) = 0;
  /// Terminal used for challenge spend `index` (0 or 1).
  virtual std::unique_ptr<CardTerminal> challenge_terminal(World& w, int index, const IndChallenge& c);
  virtual void observe(int index, const Transcript& transcript, const SpendResult& result);
  virtual void between(World& w, RandomSource& rng);
  virtual int guess(World& w, RandomSource& rng) = 0;
};

/// Two worlds share one set of RS keys and one trusted secret.
class SplitWorld {
 public:
  SplitWorld(const OramConfig& config, RandomPtr rng);

  std::vector<CardId> o_reg(int world, Amount bud, std::uint32_t t_nb);
  bool o_spend(int world, Epoch epoch, CardId card, Amount price);
  const std::vector<LedgerEntry>& received(int world, Epoch epoch);
  RandomSource& rng() { return *rng_; }
  const VerificationKey& rs_public() const { return rs_keys_.public_key; }

 private:
  struct Side {
    std::unique_ptr<OramServer> server;
    std::unique_ptr<DirectChannel> channel;
    std::unique_ptr<RegistrationStation> station;
    std::unique_ptr<Vendor> vendor;
    std::map<CardId, std::unique_ptr<Card>> cards;
    std::map<Epoch, std::vector<LedgerEntry>> received;
    CardId counter = 0;
  };

  RandomPtr rng_;
  SigningKeyPair rs_keys_;
  TrustedSecret sk_t_;
  Side sides_[2];
};

class AudpAdversary {
 public:
  virtual ~AudpAdversary() = default;
  virtual Epoch build(SplitWorld& worlds, RandomSource& rng) = 0;
  virtual int guess(const ReclaimProof& proof, RandomSource& rng) = 0;
};

struct Strategy {
  std::string id;
  SecAdversary sec;
  ReclAdversary recl;
  std::function<std::unique_ptr<IndAdversary>()> ind;
  std::function<std::unique_ptr<AudpAdversary>()> audp;
  /// Expected to win IND by rolling the database back (and to be caught).
  bool rewinds = false;
  /// Honest claims that must be accepted every time.
  bool honest = false;
  /// Guard probe: every AUDP trial must abort.
  bool expects_abort = false;
};

const std::vector<Strategy>& shipped_strategies();
/// Shipped strategies plus the AUDP guard probe.
const Strategy* find_strategy(std::string_view id);
const Strategy& unequal_count_probe();

// ---------------------------------------------------------------------------
// Experiments

enum class ExperimentId : std::uint8_t { kSec, kRecl, kInd, kAudp };

const char* experiment_name(ExperimentId id);
std::optional<ExperimentId> parse_experiment(std::string_view name);

struct ExperimentConfig {
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  /// Database for SEC, RECL and AUDP trials.
  OramConfig oram{OramVariant::kNaive, 16};
  /// Database for IND trials; tree-based so leaf choices are observable.
  OramConfig ind_oram{OramVariant::kTree, 16};
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ExperimentResult {
  std::string experiment;
  std::string strategy;
  std::uint64_t trials = 0;
  std::uint64_t valid = 0;       // trials that did not abort
  std::uint64_t wins = 0;        // SEC/RECL: adversary won; IND/AUDP: b' = b
  std::uint64_t aborts = 0;
  std::uint64_t accepted = 0;    // RECL: claims the reclaim station accepted
  std::uint64_t violations = 0;  // IND: trials where a challenge-household card latched a violation
  double advantage = 0;          // IND/AUDP: |wins/valid - 1/2|
  double threshold = 0;          // IND/AUDP: 3 sqrt(0.25/valid)
  std::uint64_t seed = 0;
  bool passed = false;
};

/// Runs one experiment for one strategy. Returns nullopt if the strategy has
/// no play for this experiment.
std::optional<ExperimentResult> run_experiment(ExperimentId id, const Strategy& strategy,
                                               const ExperimentConfig& config);

std::string results_header();
std::string results_row(const ExperimentResult& r);

}  // namespace aidwallet::harness
