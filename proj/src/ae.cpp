#include "aidwallet/ae.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <memory>
#include <stdexcept>

namespace aidwallet::ae {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct MacCtxDeleter {
  void operator()(EVP_MAC_CTX* p) const { EVP_MAC_CTX_free(p); }
};

EVP_MAC* cmac_algorithm() {
  static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "CMAC", nullptr);
  if (mac == nullptr) throw std::runtime_error("CMAC unavailable");
  return mac;
}

std::array<std::uint8_t, kTagSize> compute_tag(const AeKey& key, ByteView associated, ByteView iv_and_body) {
  std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter> ctx(EVP_MAC_CTX_new(cmac_algorithm()));
  if (!ctx) throw std::bad_alloc();
  char cipher_name[] = "AES-128-CBC";
  OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_CIPHER, cipher_name, 0),
                         OSSL_PARAM_construct_end()};
  if (EVP_MAC_init(ctx.get(), key.mac.data(), key.mac.size(), params) != 1) throw std::runtime_error("CMAC init");

  Bytes header;
  put_u32(header, static_cast<std::uint32_t>(associated.size()));
  if (EVP_MAC_update(ctx.get(), header.data(), header.size()) != 1 ||
      (!associated.empty() && EVP_MAC_update(ctx.get(), associated.data(), associated.size()) != 1) ||
      EVP_MAC_update(ctx.get(), iv_and_body.data(), iv_and_body.size()) != 1) {
    throw std::runtime_error("CMAC update");
  }
  std::array<std::uint8_t, kTagSize> tag{};
  std::size_t len = 0;
  if (EVP_MAC_final(ctx.get(), tag.data(), &len, tag.size()) != 1 || len != tag.size()) {
    throw std::runtime_error("CMAC final");
  }
  return tag;
}

}  // namespace

Bytes seal(const AeKey& key, ByteView plaintext, RandomSource& rng, ByteView associated) {
  Bytes out(sealed_size(plaintext.size()));
  rng.fill(std::span<std::uint8_t>(out.data(), kIvSize));

  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.enc.data(), out.data()) != 1) {
    throw std::runtime_error("AES-CBC init");
  }
  int written = 0;
  int final_len = 0;
  std::uint8_t* body = out.data() + kIvSize;
  if (EVP_EncryptUpdate(ctx.get(), body, &written, plaintext.data(), static_cast<int>(plaintext.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), body + written, &final_len) != 1) {
    throw std::runtime_error("AES-CBC encrypt");
  }
  const std::size_t body_len = static_cast<std::size_t>(written + final_len);
  if (kIvSize + body_len + kTagSize != out.size()) throw std::logic_error("unexpected ciphertext length");

  auto tag = compute_tag(key, associated, ByteView(out.data(), kIvSize + body_len));
  std::copy(tag.begin(), tag.end(), out.begin() + static_cast<std::ptrdiff_t>(kIvSize + body_len));
  return out;
}

std::optional<Bytes> open(const AeKey& key, ByteView ciphertext, ByteView associated) {
  if (ciphertext.size() < kIvSize + kBlockSize + kTagSize) return std::nullopt;
  const std::size_t body_len = ciphertext.size() - kIvSize - kTagSize;
  if (body_len % kBlockSize != 0) return std::nullopt;

  auto expected = compute_tag(key, associated, ciphertext.first(kIvSize + body_len));
  if (CRYPTO_memcmp(expected.data(), ciphertext.data() + kIvSize + body_len, kTagSize) != 0) return std::nullopt;

  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.enc.data(), ciphertext.data()) != 1) {
    throw std::runtime_error("AES-CBC init");
  }
  Bytes plain(body_len);
  int written = 0;
  int final_len = 0;
  if (EVP_DecryptUpdate(ctx.get(), plain.data(), &written, ciphertext.data() + kIvSize, static_cast<int>(body_len)) != 1 ||
      EVP_DecryptFinal_ex(ctx.get(), plain.data() + written, &final_len) != 1) {
    return std::nullopt;
  }
  plain.resize(static_cast<std::size_t>(written + final_len));
  return plain;
}

}  // namespace aidwallet::ae
