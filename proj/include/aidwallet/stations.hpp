#pragma once

#include <deque>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>

#include "aidwallet/card.hpp"

namespace aidwallet {

struct TrustedSetupOutput {
  TrustedSecret sk_t;
  // pk_T is empty in this instantiation and therefore has no field.
  EncryptedDatabase db;
  CommitmentParams params;
};

TrustedSetupOutput trusted_setup(const OramConfig& config, RandomSource& rng);
SigningKeyPair setup_rs_keys(RandomSource& rng);

class CapacityExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scripted terminal: plays a fixed list of frames to the card, relays ORAM
/// traffic to a channel, and collects what the card sends back.
class ScriptedTerminal : public CardTerminal {
 public:
  ScriptedTerminal(OramChannel& db, std::vector<Frame> outgoing);

  Frame receive() override;
  void send(const Frame& frame) override { received_.push_back(frame); }
  Frame exchange(const Frame& request) override { return db_.exchange(request); }
  std::unique_lock<std::mutex> open_session() override { return db_.open_session(); }

  const std::vector<Frame>& received() const { return received_; }

 private:
  OramChannel& db_;
  std::deque<Frame> outgoing_;
  std::vector<Frame> received_;
};

class RegistrationStation;

/// One run of Allocate against a card.
class RegistrationSession final : public ScriptedTerminal {
 public:
  /// Set once the card confirmed; empty after an abort.
  std::optional<HouseholdId> household() const { return household_; }

  void send(const Frame& frame) override;

 private:
  friend class RegistrationStation;
  RegistrationSession(RegistrationStation& station, OramChannel& db, std::vector<Frame> script, HouseholdId id,
                      bool allocates);

  RegistrationStation& station_;
  HouseholdId id_;
  bool allocates_;
  std::optional<HouseholdId> household_;
};

class RegistrationStation {
 public:
  RegistrationStation(SigningKeyPair keys, OramServer& db, std::uint32_t capacity);

  /// Picks the next free id. Throws CapacityExhausted. The id is consumed only
  /// when the card confirms.
  std::unique_ptr<RegistrationSession> allocate(Amount bud, std::uint32_t period = 0);
  /// Hands an already allocated household to an additional card, without the
  /// initial ORAM write.
  std::unique_ptr<RegistrationSession> enroll(HouseholdId id, Amount bud, std::uint32_t period = 0);

  /// First card runs allocate, the others enroll. Returns the id, or nullopt
  /// if the first card aborted.
  std::optional<HouseholdId> register_household(Amount bud, std::vector<Card*> cards, std::uint32_t period = 0);

  const VerificationKey& public_key() const { return keys_.public_key; }
  std::uint32_t next_id() const { return next_id_; }

 private:
  friend class RegistrationSession;
  std::vector<Frame> script(HouseholdId id, Amount bud, bool write, std::uint32_t period) const;

  SigningKeyPair keys_;
  OramServer& db_;
  DirectChannel channel_;
  std::uint32_t capacity_;
  std::uint32_t next_id_ = 0;
};

struct LedgerEntry {
  Amount spent = 0;
  TransactionProof proof;
  bool operator==(const LedgerEntry&) const = default;
};

struct VendorLedger {
  Epoch period = 0;
  std::vector<LedgerEntry> entries;
};

/// Why the vendor refused a transaction proof.
enum class ReceiveStatus : std::uint8_t {
  kAccepted,
  kCardAborted,
  kMalformed,
  kBadSignature,
  kCommitmentMismatch,
  kDuplicateTag,
  kNoResponse,
};

const char* receive_status_name(ReceiveStatus s);

/// Checks a proof against a vendor's price and period. Does not consult any ledger.
ReceiveStatus check_transaction_proof(const VerificationKey& rs_public, Epoch epoch, Amount price,
                                      const TransactionProof& proof);

class Vendor;

/// One run of Receive. The card talks to this object; the vendor's ledger is
/// updated when the card delivers its final frame.
class VendorSession final : public CardTerminal {
 public:
  Frame receive() override;
  void send(const Frame& frame) override;
  Frame exchange(const Frame& request) override;
  std::unique_lock<std::mutex> open_session() override;

  ReceiveStatus status() const { return status_; }
  bool accepted() const { return status_ == ReceiveStatus::kAccepted; }
  const std::optional<TransactionProof>& proof() const { return proof_; }
  const std::optional<SignedBalance>& running_balance() const { return balance_; }

 private:
  friend class Vendor;
  VendorSession(Vendor& vendor, Epoch epoch, Amount price, bool running_balance);

  Vendor& vendor_;
  Epoch epoch_;
  Amount price_;
  bool running_;
  std::deque<Frame> outgoing_;
  ReceiveStatus status_ = ReceiveStatus::kNoResponse;
  std::optional<TransactionProof> proof_;
  std::optional<SignedBalance> balance_;
};

class Vendor {
 public:
  Vendor(std::string name, VerificationKey rs_public, OramServer& db);

  /// Starts a transaction proof exchange for (epoch, price).
  std::unique_ptr<VendorSession> receive(Epoch epoch, Amount price);
  /// Starts a running-balance exchange for (epoch, price).
  std::unique_ptr<VendorSession> receive_running_balance(Epoch epoch, Amount price);

  const std::string& name() const { return name_; }
  const VendorLedger& ledger(Epoch epoch);
  std::vector<LedgerEntry> take_entries(Epoch epoch);
  const std::map<Epoch, VendorLedger>& ledgers() const { return ledgers_; }
  std::optional<SignedBalance> running_balance(Epoch epoch) const;

 private:
  friend class VendorSession;

  std::string name_;
  VerificationKey rs_public_;
  DirectChannel channel_;
  std::map<Epoch, VendorLedger> ledgers_;
  std::set<Tag> seen_tags_;
  std::map<Epoch, SignedBalance> balances_;
};

}  // namespace aidwallet
