#pragma once

#include <filesystem>
#include <optional>

#include "aidwallet/oram.hpp"
#include "aidwallet/protocol.hpp"

namespace aidwallet {

enum class TopUpRule : std::uint8_t { kAddAllowance = 1, kResetToAllowance = 2 };

struct PeriodPolicy {
  TopUpRule rule = TopUpRule::kAddAllowance;
  Amount allowance = 0;
  bool operator==(const PeriodPolicy&) const = default;
};

/// sk_T as handed to every card by the trusted party.
struct TrustedSecret {
  OramKey oram_key;
  PrfKey prf_key;
  bool operator==(const TrustedSecret&) const = default;
};

struct CardState {
  static constexpr std::uint8_t kVersion = 1;

  VerificationKey rs_public;
  std::optional<SigningSecret> rs_secret;
  OramKey oram_key;
  PrfKey prf_key;
  std::optional<HouseholdId> household;
  std::optional<Counter> last_ctr_written;
  bool violation = false;
  bool retired = false;
  std::optional<PeriodPolicy> period_policy;

  bool registered() const { return household.has_value(); }
  bool operator==(const CardState&) const = default;
};

/// State file: "AWCS" || version u8 || fields in declaration order. Optional
/// fields carry a presence byte; booleans are one byte.
Bytes serialize_card_state(const CardState& st);
CardState parse_card_state(ByteView bytes);

CardState setup_card(const VerificationKey& rs_public, const TrustedSecret& sk_t,
                     std::optional<PeriodPolicy> policy = std::nullopt);

/// The other end of a card's interaction: a registration station, a vendor,
/// or an adversary standing in for one. ORAM frames go through exchange().
class CardTerminal : public OramChannel {
 public:
  /// Next protocol frame from the terminal.
  virtual Frame receive() = 0;
  /// Protocol frame from the card.
  virtual void send(const Frame& frame) = 0;
};

enum class CardStatus : std::uint8_t {
  kSuccess,
  kInsufficientBalance,
  kIntegrityFailure,
  kRollbackDetected,
  kViolation,
  kLocked,
  kNotRegistered,
  kAlreadyRegistered,
  kRetired,
  kBadKey,
  kBadSignature,
  kProtocolError,
};

const char* status_name(CardStatus s);

struct SpendResult {
  CardStatus status = CardStatus::kProtocolError;
  Amount price = 0;
  Epoch epoch = 0;

  bool success() const { return status == CardStatus::kSuccess; }
};

struct RunningBalanceResult {
  CardStatus status = CardStatus::kProtocolError;
  std::optional<SignedBalance> balance;

  bool success() const { return status == CardStatus::kSuccess; }
};

/// violation iff a watermark exists and observed_ctr is below it.
bool detect_rollback(const CardState& st, Counter observed_ctr);

/// Applies the top-up rule when current_period is later than rec.last_period.
/// add-allowance adds once per elapsed period and saturates at 65535.
HouseholdRecord apply_period_update(const HouseholdRecord& rec, std::uint16_t current_period,
                                    const PeriodPolicy& policy);

/// Simulated secure element. One interaction at a time.
class Card {
 public:
  Card(CardState state, RandomPtr rng);

  /// Persist the state to this file after every change (and before any proof
  /// leaves the card).
  void attach_state_file(std::filesystem::path path);
  static Card load(const std::filesystem::path& path, RandomPtr rng);

  /// User authentication gate (PIN or biometric in a deployment).
  void set_unlocked(bool unlocked) { unlocked_ = unlocked; }
  bool unlocked() const { return unlocked_; }

  CardStatus request(CardTerminal& station);
  SpendResult spend(Amount price, CardTerminal& vendor);
  RunningBalanceResult spend_running_balance(Amount price, CardTerminal& vendor);

  const CardState& state() const { return state_; }

 private:
  CardStatus precheck() const;
  /// ORAM read of the household record plus rollback and period handling.
  CardStatus load_record(CardTerminal& terminal, Epoch epoch, HouseholdRecord& rec);
  void persist();
  OramClient& oram();

  CardState state_;
  RandomPtr rng_;
  std::optional<OramClient> oram_;
  std::optional<std::filesystem::path> state_file_;
  bool unlocked_ = true;
};

}  // namespace aidwallet
