#pragma once

#include <array>

#include "aidwallet/group.hpp"

namespace aidwallet {

// ECDSA over P-256 with SHA-256. Signatures are the fixed 64-byte r||s
// encoding (each half big-endian, zero-padded). The per-signature nonce is
// drawn from the caller's RandomSource.

inline constexpr std::size_t kSignatureSize = 64;

struct SigningSecret {
  Scalar d;
  auto operator<=>(const SigningSecret&) const = default;
};

struct VerificationKey {
  GroupElement point;
  auto operator<=>(const VerificationKey&) const = default;
};

struct SigningKeyPair {
  SigningSecret secret;
  VerificationKey public_key;
};

using Signature = std::array<std::uint8_t, kSignatureSize>;

namespace ds {

SigningKeyPair keygen(RandomSource& rng);
/// Public key belonging to a secret; used by cards to sanity-check key material.
VerificationKey derive_public(const SigningSecret& secret);
/// Throws std::invalid_argument for an empty message or an out-of-range secret.
Signature sign(const SigningSecret& secret, ByteView message, RandomSource& rng);
/// Malformed signatures (wrong length, r or s outside [1, q)) are rejected,
/// never thrown.
bool verify(const VerificationKey& key, ByteView message, ByteView signature);

}  // namespace ds
}  // namespace aidwallet
