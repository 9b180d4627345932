#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string_view>

#include "aidwallet/random.hpp"

namespace aidwallet {

// Prime-order group: NIST P-256. Scalars are 32-byte big-endian integers
// modulo the group order q; elements use 33-byte SEC1 compressed encoding,
// with the identity encoded as 33 zero bytes so every element has the same
// width on the wire.

inline constexpr std::size_t kScalarSize = 32;
inline constexpr std::size_t kElementSize = 33;

struct Scalar {
  std::array<std::uint8_t, kScalarSize> bytes{};

  static Scalar from_u64(std::uint64_t v);
  bool is_zero() const;
  auto operator<=>(const Scalar&) const = default;
};

struct GroupElement {
  std::array<std::uint8_t, kElementSize> bytes{};

  bool is_identity() const;
  auto operator<=>(const GroupElement&) const = default;
};

namespace group {

/// q as a 32-byte big-endian integer.
const std::array<std::uint8_t, kScalarSize>& order_bytes();
bool in_range(const Scalar& s);
Scalar random_scalar(RandomSource& rng);
Scalar random_nonzero_scalar(RandomSource& rng);
Scalar add(const Scalar& a, const Scalar& b);
Scalar negate(const Scalar& a);

GroupElement generator();
GroupElement identity();
/// True iff the encoding decodes to a point of the group (identity included).
bool is_member(const GroupElement& e);
GroupElement add(const GroupElement& a, const GroupElement& b);
/// base^k. Throws std::invalid_argument for a non-member base.
GroupElement multiply(const GroupElement& base, const Scalar& k);
/// Try-and-increment: x = SHA-256(domain || counter_be32) until 0x02||x is on
/// the curve. Nobody knows the discrete log of the output base g.
GroupElement hash_to_group(std::string_view domain);

}  // namespace group
}  // namespace aidwallet
