#include "aidwallet/stations.hpp"

namespace aidwallet {

TrustedSetupOutput trusted_setup(const OramConfig& config, RandomSource& rng) {
  auto [oram_key, db] = oram_init(config, rng);
  return TrustedSetupOutput{TrustedSecret{oram_key, PrfKey::generate(rng)}, std::move(db), pedersen::setup()};
}

SigningKeyPair setup_rs_keys(RandomSource& rng) { return ds::keygen(rng); }

// ---------------------------------------------------------------------------

ScriptedTerminal::ScriptedTerminal(OramChannel& db, std::vector<Frame> outgoing)
    : db_(db), outgoing_(outgoing.begin(), outgoing.end()) {}

Frame ScriptedTerminal::receive() {
  if (outgoing_.empty()) return Frame{FrameType::kError, {}};
  Frame f = std::move(outgoing_.front());
  outgoing_.pop_front();
  return f;
}

RegistrationSession::RegistrationSession(RegistrationStation& station, OramChannel& db, std::vector<Frame> script,
                                         HouseholdId id, bool allocates)
    : ScriptedTerminal(db, std::move(script)), station_(station), id_(id), allocates_(allocates) {}

void RegistrationSession::send(const Frame& frame) {
  ScriptedTerminal::send(frame);
  if (frame.type != FrameType::kRegisterDone || household_) return;
  household_ = id_;
  if (allocates_ && station_.next_id_ == id_) ++station_.next_id_;
}

RegistrationStation::RegistrationStation(SigningKeyPair keys, OramServer& db, std::uint32_t capacity)
    : keys_(std::move(keys)), db_(db), channel_(db), capacity_(capacity) {}

std::vector<Frame> RegistrationStation::script(HouseholdId id, Amount bud, bool write, std::uint32_t period) const {
  return {encode_register_id(id), encode_register_secret(keys_.secret),
          encode_register_budget(RegisterBudget{bud, static_cast<std::uint8_t>(write ? kRegisterInitialWrite : 0),
                                                period})};
}

std::unique_ptr<RegistrationSession> RegistrationStation::allocate(Amount bud, std::uint32_t period) {
  if (next_id_ >= capacity_) throw CapacityExhausted("no household ids left");
  return std::unique_ptr<RegistrationSession>(
      new RegistrationSession(*this, channel_, script(next_id_, bud, true, period), next_id_, true));
}

std::unique_ptr<RegistrationSession> RegistrationStation::enroll(HouseholdId id, Amount bud, std::uint32_t period) {
  if (id >= next_id_) throw std::invalid_argument("household not allocated");
  return std::unique_ptr<RegistrationSession>(
      new RegistrationSession(*this, channel_, script(id, bud, false, period), id, false));
}

std::optional<HouseholdId> RegistrationStation::register_household(Amount bud, std::vector<Card*> cards,
                                                                   std::uint32_t period) {
  if (cards.empty()) throw std::invalid_argument("a household needs at least one card");
  auto first = allocate(bud, period);
  if (cards.front()->request(*first) != CardStatus::kSuccess || !first->household()) return std::nullopt;
  const HouseholdId id = *first->household();
  for (std::size_t i = 1; i < cards.size(); ++i) {
    auto extra = enroll(id, bud, period);
    cards[i]->request(*extra);
  }
  return id;
}

// ---------------------------------------------------------------------------

const char* receive_status_name(ReceiveStatus s) {
  switch (s) {
    case ReceiveStatus::kAccepted:
      return "accepted";
    case ReceiveStatus::kCardAborted:
      return "card-aborted";
    case ReceiveStatus::kMalformed:
      return "malformed";
    case ReceiveStatus::kBadSignature:
      return "bad-signature";
    case ReceiveStatus::kCommitmentMismatch:
      return "commitment-mismatch";
    case ReceiveStatus::kDuplicateTag:
      return "duplicate-tag";
    case ReceiveStatus::kNoResponse:
      return "no-response";
  }
  return "unknown";
}

ReceiveStatus check_transaction_proof(const VerificationKey& rs_public, Epoch epoch, Amount price,
                                      const TransactionProof& proof) {
  if (!ds::verify(rs_public, spend_message(proof.tau, epoch, proof.com), proof.sigma)) {
    return ReceiveStatus::kBadSignature;
  }
  if (!group::in_range(proof.r.r)) return ReceiveStatus::kCommitmentMismatch;
  if (pedersen::commit(pedersen::setup(), static_cast<std::uint64_t>(price), proof.r) != proof.com) {
    return ReceiveStatus::kCommitmentMismatch;
  }
  return ReceiveStatus::kAccepted;
}

VendorSession::VendorSession(Vendor& vendor, Epoch epoch, Amount price, bool running_balance)
    : vendor_(vendor), epoch_(epoch), price_(price), running_(running_balance) {
  outgoing_.push_back(encode_announcement(PriceAnnouncement{price, epoch}));
  if (running_) outgoing_.push_back(encode_vendor_balance(vendor_.running_balance(epoch)));
}

Frame VendorSession::exchange(const Frame& request) { return vendor_.channel_.exchange(request); }

std::unique_lock<std::mutex> VendorSession::open_session() { return vendor_.channel_.open_session(); }

Frame VendorSession::receive() {
  if (outgoing_.empty()) return Frame{FrameType::kError, {}};
  Frame f = std::move(outgoing_.front());
  outgoing_.pop_front();
  return f;
}

void VendorSession::send(const Frame& frame) {
  if (status_ != ReceiveStatus::kNoResponse) return;  // one final message per session
  if (frame.type == FrameType::kSpendAbort) {
    status_ = ReceiveStatus::kCardAborted;
    return;
  }

  if (running_) {
    auto b = decode_signed_balance(frame);
    if (!b) {
      status_ = ReceiveStatus::kMalformed;
      return;
    }
    auto previous = vendor_.running_balance(epoch_);
    const std::uint64_t expected = (previous ? previous->balance : 0ULL) + price_;
    const bool nonce_ok = !previous || previous->nonce == b->nonce;
    if (b->balance != expected || !nonce_ok ||
        !ds::verify(vendor_.rs_public_, running_balance_message(b->balance, b->nonce, epoch_), b->sigma)) {
      status_ = ReceiveStatus::kBadSignature;
      return;
    }
    vendor_.balances_[epoch_] = *b;
    balance_ = *b;
    status_ = ReceiveStatus::kAccepted;
    return;
  }

  auto proof = decode_proof(frame);
  if (!proof) {
    status_ = ReceiveStatus::kMalformed;
    return;
  }
  status_ = check_transaction_proof(vendor_.rs_public_, epoch_, price_, *proof);
  if (status_ != ReceiveStatus::kAccepted) return;
  if (!vendor_.seen_tags_.insert(proof->tau).second) {
    status_ = ReceiveStatus::kDuplicateTag;
    return;
  }
  VendorLedger& ledger = vendor_.ledgers_[epoch_];
  ledger.period = epoch_;
  ledger.entries.push_back(LedgerEntry{price_, *proof});
  proof_ = *proof;
}

Vendor::Vendor(std::string name, VerificationKey rs_public, OramServer& db)
    : name_(std::move(name)), rs_public_(rs_public), channel_(db) {}

std::unique_ptr<VendorSession> Vendor::receive(Epoch epoch, Amount price) {
  return std::unique_ptr<VendorSession>(new VendorSession(*this, epoch, price, false));
}

std::unique_ptr<VendorSession> Vendor::receive_running_balance(Epoch epoch, Amount price) {
  return std::unique_ptr<VendorSession>(new VendorSession(*this, epoch, price, true));
}

const VendorLedger& Vendor::ledger(Epoch epoch) {
  VendorLedger& l = ledgers_[epoch];
  l.period = epoch;
  return l;
}

std::vector<LedgerEntry> Vendor::take_entries(Epoch epoch) {
  auto it = ledgers_.find(epoch);
  if (it == ledgers_.end()) return {};
  return std::exchange(it->second.entries, {});
}

std::optional<SignedBalance> Vendor::running_balance(Epoch epoch) const {
  auto it = balances_.find(epoch);
  if (it == balances_.end()) return std::nullopt;
  return it->second;
}

}  // namespace aidwallet
