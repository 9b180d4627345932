#pragma once

#include <optional>

#include "aidwallet/commitment.hpp"
#include "aidwallet/frame.hpp"
#include "aidwallet/prf.hpp"
#include "aidwallet/record.hpp"
#include "aidwallet/signature.hpp"

namespace aidwallet {

/// Card-facing message payloads. Every payload has a fixed length.

struct PriceAnnouncement {
  Amount price = 0;
  Epoch epoch = 0;
  bool operator==(const PriceAnnouncement&) const = default;
};

/// pi = (sigma, tau, Com, r): 64 + 16 + 33 + 32 = 145 bytes on the wire.
struct TransactionProof {
  static constexpr std::size_t kWireSize = 64 + 16 + 33 + 32;
  Signature sigma{};
  Tag tau{};
  Commitment com;
  Opening r;
  bool operator==(const TransactionProof&) const = default;
};

inline constexpr std::uint8_t kRegisterInitialWrite = 0x01;

struct RegisterBudget {
  Amount budget = 0;
  std::uint8_t flags = kRegisterInitialWrite;
  std::uint32_t period = 0;
  bool operator==(const RegisterBudget&) const = default;
};

/// A vendor's per-period running balance, signed by a card under sk_RS.
struct SignedBalance {
  static constexpr std::size_t kWireSize = 4 + 16 + 64;
  std::uint32_t balance = 0;
  std::array<std::uint8_t, 16> nonce{};
  Signature sigma{};
  bool operator==(const SignedBalance&) const = default;
};

/// tau || eps (u32 BE) || Com (33 bytes).
Bytes spend_message(const Tag& tau, Epoch epoch, const Commitment& com);
/// "RB" || balance (u32 BE) || nonce || eps (u32 BE).
Bytes running_balance_message(std::uint32_t balance, const std::array<std::uint8_t, 16>& nonce, Epoch epoch);
/// id (u32 BE) || ctr (u16 BE).
Bytes tag_input(HouseholdId id, Counter ctr);

Frame encode_announcement(const PriceAnnouncement& a);
Frame encode_proof(const TransactionProof& p);
Frame encode_register_id(HouseholdId id);
Frame encode_register_secret(const SigningSecret& s);
Frame encode_register_budget(const RegisterBudget& b);
/// Empty payload is the zero sentinel (no balance yet this period).
Frame encode_vendor_balance(const std::optional<SignedBalance>& b);
Frame encode_signed_balance(const SignedBalance& b);

Bytes proof_bytes(const TransactionProof& p);

// Decoders return nullopt on wrong frame type or payload length.
std::optional<PriceAnnouncement> decode_announcement(const Frame& f);
std::optional<TransactionProof> decode_proof(const Frame& f);
std::optional<TransactionProof> decode_proof_bytes(ByteView bytes);
std::optional<HouseholdId> decode_register_id(const Frame& f);
std::optional<SigningSecret> decode_register_secret(const Frame& f);
std::optional<RegisterBudget> decode_register_budget(const Frame& f);
/// Outer nullopt: malformed. Inner nullopt: zero sentinel.
std::optional<std::optional<SignedBalance>> decode_vendor_balance(const Frame& f);
std::optional<SignedBalance> decode_signed_balance(const Frame& f);
std::optional<SignedBalance> decode_signed_balance_bytes(ByteView bytes);
Bytes signed_balance_bytes(const SignedBalance& b);

}  // namespace aidwallet
