#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include "aidwallet/bytes.hpp"

namespace aidwallet {

/// Source of randomness for every protocol party. The only stateful
/// dependency of the primitives; tests inject a SeededRandom.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  /// Uniform in [0, bound). bound must be nonzero.
  std::uint64_t uniform(std::uint64_t bound);
  bool coin() { return (next_u64() & 1U) != 0; }

  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
};

/// Operating-system CSPRNG (OpenSSL RAND_bytes). Failure is fatal.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic stream: AES-256-CTR keystream keyed by SHA-256 of the seed.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed);
  explicit SeededRandom(std::string_view seed);
  ~SeededRandom() override;
  SeededRandom(const SeededRandom&) = delete;
  SeededRandom& operator=(const SeededRandom&) = delete;

  void fill(std::span<std::uint8_t> out) override;

 private:
  void init(ByteView seed_material);
  void refill();

  struct CipherState;
  std::unique_ptr<CipherState> state_;
  std::array<std::uint8_t, 4096> buffer_{};
  std::size_t used_ = buffer_.size();
};

using RandomPtr = std::shared_ptr<RandomSource>;

}  // namespace aidwallet
