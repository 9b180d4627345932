#pragma once

#include <array>
#include <compare>

#include "aidwallet/random.hpp"

namespace aidwallet {

struct PrfKey {
  std::array<std::uint8_t, 16> bytes{};

  static PrfKey generate(RandomSource& rng) { return PrfKey{rng.bytes<16>()}; }
  auto operator<=>(const PrfKey&) const = default;
};

/// 128-bit transaction tag.
using Tag = std::array<std::uint8_t, 16>;

namespace prf {

/// HMAC-SHA-256 under the key, truncated to the first 16 bytes.
Tag eval(const PrfKey& key, ByteView input);

}  // namespace prf
}  // namespace aidwallet
