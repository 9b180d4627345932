#include "aidwallet/prf.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <stdexcept>

namespace aidwallet::prf {

Tag eval(const PrfKey& key, ByteView input) {
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> mac{};
  unsigned int len = 0;
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* data = input.empty() ? &kEmpty : input.data();
  if (HMAC(EVP_sha256(), key.bytes.data(), static_cast<int>(key.bytes.size()), data, input.size(), mac.data(), &len) ==
          nullptr ||
      len < 16) {
    throw std::runtime_error("HMAC failed");
  }
  Tag tag{};
  std::copy_n(mac.begin(), tag.size(), tag.begin());
  return tag;
}

}  // namespace aidwallet::prf
