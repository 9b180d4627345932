#pragma once

#include <array>
#include <compare>
#include <optional>

#include "aidwallet/random.hpp"

namespace aidwallet {

/// Encrypt-then-MAC key: AES-128 for CBC encryption, an independent AES-128
/// key for CMAC.
struct AeKey {
  std::array<std::uint8_t, 16> enc{};
  std::array<std::uint8_t, 16> mac{};

  static AeKey generate(RandomSource& rng) { return AeKey{rng.bytes<16>(), rng.bytes<16>()}; }
  auto operator<=>(const AeKey&) const = default;
};

namespace ae {

inline constexpr std::size_t kBlockSize = 16;
inline constexpr std::size_t kIvSize = 16;
inline constexpr std::size_t kTagSize = 16;

/// Ciphertext layout: IV(16) || AES-128-CBC(PKCS#7-padded plaintext) || tag(16),
/// where tag = CMAC(mac_key, len(ad) as u32 BE || ad || IV || body).
constexpr std::size_t sealed_size(std::size_t plaintext_size) {
  return kIvSize + (plaintext_size / kBlockSize + 1) * kBlockSize + kTagSize;
}

/// Fresh IV per call. The associated data is authenticated but not stored.
Bytes seal(const AeKey& key, ByteView plaintext, RandomSource& rng, ByteView associated = {});
/// nullopt on any tag, length or padding failure.
std::optional<Bytes> open(const AeKey& key, ByteView ciphertext, ByteView associated = {});

}  // namespace ae
}  // namespace aidwallet
