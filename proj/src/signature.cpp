#include "aidwallet/signature.hpp"

#include <openssl/sha.h>

#include <map>
#include <mutex>

#include "ec_internal.hpp"

namespace aidwallet::ds {

namespace {

ec::Bn message_digest(ByteView message) {
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
  SHA256(message.data(), message.size(), digest.data());
  // P-256 order has 256 bits, so the full digest is used without truncation.
  ec::Bn e(BN_bin2bn(digest.data(), static_cast<int>(digest.size()), nullptr));
  if (!e) throw std::bad_alloc();
  return e;
}


// Decompressing a key costs a modular square root; verification keys repeat.
// Small and bounded.
ec::Point decode_key(const GroupElement& key, BN_CTX* ctx) {
  constexpr std::size_t kMaxKeys = 16;
  static std::mutex mutex;
  static std::map<GroupElement, ec::Point> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) {
      return ec::Point(EC_POINT_dup(it->second.get(), ec::curve().group));
    }
  }
  ec::Point q = ec::decode(key, ctx);
  if (!q) return q;
  std::lock_guard lock(mutex);
  if (cache.size() >= kMaxKeys) cache.erase(cache.begin());
  cache.emplace(key, ec::Point(EC_POINT_dup(q.get(), ec::curve().group)));
  return q;
}
}  // namespace

SigningKeyPair keygen(RandomSource& rng) {
  SigningKeyPair pair;
  pair.secret.d = group::random_nonzero_scalar(rng);
  pair.public_key = derive_public(pair.secret);
  return pair;
}

VerificationKey derive_public(const SigningSecret& secret) {
  if (secret.d.is_zero() || !group::in_range(secret.d)) throw std::invalid_argument("signing secret out of range");
  auto ctx = ec::new_ctx();
  auto d = ec::to_bn(secret.d);
  auto q = ec::new_point();
  ec::check(EC_POINT_mul(ec::curve().group, q.get(), d.get(), nullptr, nullptr, ctx.get()), "EC_POINT_mul");
  return VerificationKey{ec::encode(q.get(), ctx.get())};
}

Signature sign(const SigningSecret& secret, ByteView message, RandomSource& rng) {
  if (message.empty()) throw std::invalid_argument("ds::sign: empty message");
  if (secret.d.is_zero() || !group::in_range(secret.d)) throw std::invalid_argument("signing secret out of range");

  const auto& c = ec::curve();
  auto ctx = ec::new_ctx();
  auto e = message_digest(message);
  auto d = ec::to_bn(secret.d);
  auto r = ec::new_bn();
  auto s = ec::new_bn();
  auto x = ec::new_bn();
  auto point = ec::new_point();

  for (;;) {
    auto k = ec::to_bn(group::random_nonzero_scalar(rng));
    ec::check(EC_POINT_mul(c.group, point.get(), k.get(), nullptr, nullptr, ctx.get()), "EC_POINT_mul");
    ec::check(EC_POINT_get_affine_coordinates(c.group, point.get(), x.get(), nullptr, ctx.get()), "affine x");
    ec::check(BN_nnmod(r.get(), x.get(), c.order.get(), ctx.get()), "BN_nnmod");
    if (BN_is_zero(r.get())) continue;

    // s = k^-1 (e + r d) mod q
    auto rd = ec::new_bn();
    ec::check(BN_mod_mul(rd.get(), r.get(), d.get(), c.order.get(), ctx.get()), "BN_mod_mul");
    auto sum = ec::new_bn();
    ec::check(BN_mod_add(sum.get(), e.get(), rd.get(), c.order.get(), ctx.get()), "BN_mod_add");
    ec::Bn kinv(BN_mod_inverse(nullptr, k.get(), c.order.get(), ctx.get()));
    if (!kinv) throw std::runtime_error("nonce inversion failed");
    ec::check(BN_mod_mul(s.get(), kinv.get(), sum.get(), c.order.get(), ctx.get()), "BN_mod_mul");
    if (BN_is_zero(s.get())) continue;
    break;
  }

  Signature sig{};
  ec::check(BN_bn2binpad(r.get(), sig.data(), 32) == 32, "r encoding");
  ec::check(BN_bn2binpad(s.get(), sig.data() + 32, 32) == 32, "s encoding");
  return sig;
}

bool verify(const VerificationKey& key, ByteView message, ByteView signature) {
  if (signature.size() != kSignatureSize) return false;
  const auto& c = ec::curve();
  auto ctx = ec::new_ctx();

  auto q = decode_key(key.point, ctx.get());
  if (!q || EC_POINT_is_at_infinity(c.group, q.get()) == 1) return false;

  ec::Bn r(BN_bin2bn(signature.data(), 32, nullptr));
  ec::Bn s(BN_bin2bn(signature.data() + 32, 32, nullptr));
  if (!r || !s) return false;
  if (BN_is_zero(r.get()) || BN_is_zero(s.get())) return false;
  if (BN_cmp(r.get(), c.order.get()) >= 0 || BN_cmp(s.get(), c.order.get()) >= 0) return false;

  auto e = message_digest(message);
  ec::Bn w(BN_mod_inverse(nullptr, s.get(), c.order.get(), ctx.get()));
  if (!w) return false;
  auto u1 = ec::new_bn();
  auto u2 = ec::new_bn();
  ec::check(BN_mod_mul(u1.get(), e.get(), w.get(), c.order.get(), ctx.get()), "BN_mod_mul");
  ec::check(BN_mod_mul(u2.get(), r.get(), w.get(), c.order.get(), ctx.get()), "BN_mod_mul");

  auto point = ec::new_point();
  ec::check(EC_POINT_mul(c.group, point.get(), u1.get(), q.get(), u2.get(), ctx.get()), "EC_POINT_mul");
  if (EC_POINT_is_at_infinity(c.group, point.get()) == 1) return false;

  auto x = ec::new_bn();
  ec::check(EC_POINT_get_affine_coordinates(c.group, point.get(), x.get(), nullptr, ctx.get()), "affine x");
  auto v = ec::new_bn();
  ec::check(BN_nnmod(v.get(), x.get(), c.order.get(), ctx.get()), "BN_nnmod");
  return BN_cmp(v.get(), r.get()) == 0;
}

}  // namespace aidwallet::ds
