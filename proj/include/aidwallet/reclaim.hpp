#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>

#include "aidwallet/stations.hpp"

namespace aidwallet {

/// A transaction proof without its opening.
struct ReclaimItem {
  static constexpr std::size_t kWireSize = 64 + 16 + 33;
  Signature sigma{};
  Tag tau{};
  Commitment com;
  bool operator==(const ReclaimItem&) const = default;
};

struct ReclaimProof {
  static constexpr std::uint8_t kVersion = 1;
  Epoch period = 0;
  std::uint64_t claimed_total = 0;
  Opening r_sum;
  std::vector<ReclaimItem> items;
  bool operator==(const ReclaimProof&) const = default;
};

/// spent_sum = sum of entry amounts, r_sum = sum of openings mod q.
/// Throws std::invalid_argument on an empty entry list.
ReclaimProof create_reclaim_proof(Epoch epoch, std::span<const LedgerEntry> entries);

enum class ReclaimVerdict : std::uint8_t {
  kAccepted,
  kEmpty,
  kPeriodMismatch,
  kTotalMismatch,
  kBadSignature,
  kCommitmentMismatch,
  kDuplicateTag,
  kTagAlreadyClaimed,
};

const char* verdict_name(ReclaimVerdict v);

/// Append-only set of accepted tags. With a backing file every accepted
/// proof appends its tags (16 bytes each) in one write.
class TagLedger {
 public:
  TagLedger() = default;
  /// Loads existing tags from the file (if any) and appends to it from now on.
  explicit TagLedger(std::filesystem::path file);

  bool contains(const Tag& tag) const { return tags_.count(tag) != 0; }
  std::size_t size() const { return tags_.size(); }
  void append(std::span<const Tag> tags);

 private:
  std::set<Tag> tags_;
  std::optional<std::filesystem::path> file_;
};

/// All checks, no side effects. Checks run in a fixed order and the first
/// failure is reported.
ReclaimVerdict check_reclaim_proof(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                                   const ReclaimProof& proof, const TagLedger& ledger);
/// As check_reclaim_proof; on acceptance the proof's tags join the ledger.
ReclaimVerdict verify_reclaim_proof(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                                    const ReclaimProof& proof, TagLedger& ledger);
/// The auditor repeats the reclaim checks against its own ledger.
ReclaimVerdict audit_verify(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                            const ReclaimProof& proof, TagLedger& auditor_ledger);

class NonceLedger {
 public:
  bool seen(const std::array<std::uint8_t, 16>& nonce) const { return nonces_.count(nonce) != 0; }
  void record(const std::array<std::uint8_t, 16>& nonce) { nonces_.insert(nonce); }

 private:
  std::set<std::array<std::uint8_t, 16>> nonces_;
};

/// Accepted amount, or nullopt for a bad signature or a stale nonce.
std::optional<std::uint32_t> reclaim_running_balance_verify(const VerificationKey& rs_public, Epoch epoch,
                                                            const SignedBalance& record, NonceLedger& nonces);

class ReclaimStation {
 public:
  explicit ReclaimStation(VerificationKey rs_public, std::optional<std::filesystem::path> ledger_file = {});

  ReclaimVerdict verify(Epoch epoch, std::uint64_t spent_sum, const ReclaimProof& proof);
  std::optional<std::uint32_t> verify_running_balance(Epoch epoch, const SignedBalance& record);
  const TagLedger& tags() const { return tags_; }

 private:
  VerificationKey rs_public_;
  TagLedger tags_;
  NonceLedger nonces_;
};

class Auditor {
 public:
  explicit Auditor(VerificationKey rs_public, std::optional<std::filesystem::path> ledger_file = {});

  ReclaimVerdict audit(Epoch epoch, std::uint64_t spent_sum, const ReclaimProof& proof);
  const TagLedger& tags() const { return tags_; }

 private:
  VerificationKey rs_public_;
  TagLedger tags_;
};

/// Binary form: "AWRP" || version u8 || period u32 || claimed_total u64 ||
/// r_sum (32) || count u32 || count x (sigma 64 || tau 16 || Com 33).
Bytes encode_reclaim_proof(const ReclaimProof& proof);
/// Text form: a header line, then "key value" lines with hex fields.
std::string reclaim_proof_text(const ReclaimProof& proof);
/// Accepts either form. Throws DecodeError.
ReclaimProof parse_reclaim_proof(ByteView bytes);

}  // namespace aidwallet
