#include "aidwallet/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace aidwallet {

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  std::uint64_t v = 0;
  for (std::uint8_t b : raw) v = (v << 8) | b;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform: zero bound");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("system randomness source failed");
  }
}

struct SeededRandom::CipherState {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~CipherState() { EVP_CIPHER_CTX_free(ctx); }
};

namespace {

std::array<std::uint8_t, 32> derive_key(ByteView seed) {
  std::array<std::uint8_t, 32> key{};
  SHA256(seed.data(), seed.size(), key.data());
  return key;
}

}  // namespace

SeededRandom::SeededRandom(std::uint64_t seed) {
  Bytes raw;
  put_bytes(raw, as_view("aidwallet-seed:"));
  put_u64(raw, seed);
  init(raw);
}

SeededRandom::SeededRandom(std::string_view seed) {
  Bytes raw;
  put_bytes(raw, as_view("aidwallet-seed-str:"));
  put_bytes(raw, as_view(seed));
  init(raw);
}

void SeededRandom::init(ByteView seed_material) {
  auto key = derive_key(seed_material);
  state_ = std::make_unique<CipherState>();
  state_->ctx = EVP_CIPHER_CTX_new();
  std::array<std::uint8_t, 16> iv{};
  if (state_->ctx == nullptr ||
      EVP_EncryptInit_ex(state_->ctx, EVP_aes_256_ctr(), nullptr, key.data(), iv.data()) != 1) {
    throw std::runtime_error("cannot initialise seeded randomness");
  }
}

SeededRandom::~SeededRandom() = default;

void SeededRandom::refill() {
  static const std::array<std::uint8_t, 4096> kZeros{};
  int len = 0;
  if (EVP_EncryptUpdate(state_->ctx, buffer_.data(), &len, kZeros.data(), static_cast<int>(kZeros.size())) != 1 ||
      len != static_cast<int>(buffer_.size())) {
    throw std::runtime_error("seeded randomness keystream failure");
  }
  used_ = 0;
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::size_t written = 0;
  while (written < out.size()) {
    if (used_ == buffer_.size()) refill();
    std::size_t n = std::min(out.size() - written, buffer_.size() - used_);
    std::memcpy(out.data() + written, buffer_.data() + used_, n);
    used_ += n;
    written += n;
  }
}

}  // namespace aidwallet
