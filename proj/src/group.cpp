// EC_GROUP_precompute_mult has no non-deprecated replacement for custom bases.
#define OPENSSL_SUPPRESS_DEPRECATED

#include "aidwallet/group.hpp"

#include <openssl/sha.h>

#include <algorithm>

#include "ec_internal.hpp"

namespace aidwallet {

namespace ec {

Curve::Curve() : group(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1)), order(BN_new()) {
  if (group == nullptr || !order) throw std::runtime_error("P-256 unavailable");
  check(EC_GROUP_get_order(group, order.get(), nullptr), "EC_GROUP_get_order");
}

Curve::~Curve() { EC_GROUP_free(group); }

const Curve& curve() {
  static const Curve instance;
  return instance;
}

FixedBase::FixedBase(const EC_POINT* base) : group_(EC_GROUP_dup(curve().group)) {
  if (group_ == nullptr) throw std::runtime_error("EC_GROUP_dup");
  Ctx ctx(BN_CTX_new());
  Bn cofactor(BN_new());
  check(EC_GROUP_get_cofactor(curve().group, cofactor.get(), ctx.get()), "EC_GROUP_get_cofactor");
  check(EC_GROUP_set_generator(group_, base, curve().order.get(), cofactor.get()), "EC_GROUP_set_generator");
  check(EC_GROUP_precompute_mult(group_, ctx.get()), "EC_GROUP_precompute_mult");
}

FixedBase::~FixedBase() { EC_GROUP_free(group_); }

void FixedBase::multiply(EC_POINT* out, const BIGNUM* k1, const BIGNUM* k2, BN_CTX* ctx) const {
  check(EC_POINT_mul(group_, out, k2, nullptr, nullptr, ctx), "EC_POINT_mul");
  if (k1 == nullptr) return;
  Point first(EC_POINT_new(curve().group));
  check(EC_POINT_mul(curve().group, first.get(), k1, nullptr, nullptr, ctx), "EC_POINT_mul");
  check(EC_POINT_add(curve().group, out, out, first.get(), ctx), "EC_POINT_add");
}

Bn new_bn() {
  Bn bn(BN_new());
  if (!bn) throw std::bad_alloc();
  return bn;
}

Point new_point() {
  Point p(EC_POINT_new(curve().group));
  if (!p) throw std::bad_alloc();
  return p;
}

Ctx new_ctx() {
  Ctx ctx(BN_CTX_new());
  if (!ctx) throw std::bad_alloc();
  return ctx;
}

Bn to_bn(const Scalar& s) {
  Bn bn(BN_bin2bn(s.bytes.data(), static_cast<int>(s.bytes.size()), nullptr));
  if (!bn) throw std::bad_alloc();
  return bn;
}

Scalar from_bn(const BIGNUM* bn) {
  Scalar s;
  check(BN_bn2binpad(bn, s.bytes.data(), static_cast<int>(s.bytes.size())) == static_cast<int>(s.bytes.size()),
        "scalar does not fit in 32 bytes");
  return s;
}

Point decode(const GroupElement& e, BN_CTX* ctx) {
  Point p = new_point();
  if (e.is_identity()) {
    check(EC_POINT_set_to_infinity(curve().group, p.get()), "EC_POINT_set_to_infinity");
    return p;
  }
  if (e.bytes[0] != 0x02 && e.bytes[0] != 0x03) return nullptr;
  if (EC_POINT_oct2point(curve().group, p.get(), e.bytes.data(), e.bytes.size(), ctx) != 1) return nullptr;
  return p;
}

GroupElement encode(const EC_POINT* p, BN_CTX* ctx) {
  GroupElement e;
  if (EC_POINT_is_at_infinity(curve().group, p) == 1) return e;
  std::size_t n = EC_POINT_point2oct(curve().group, p, POINT_CONVERSION_COMPRESSED, e.bytes.data(), e.bytes.size(), ctx);
  if (n != e.bytes.size()) throw std::runtime_error("point encoding failed");
  return e;
}

}  // namespace ec

Scalar Scalar::from_u64(std::uint64_t v) {
  Scalar s;
  for (int i = 0; i < 8; ++i) s.bytes[kScalarSize - 1 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return s;
}

bool Scalar::is_zero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

bool GroupElement::is_identity() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

namespace group {

const std::array<std::uint8_t, kScalarSize>& order_bytes() {
  static const std::array<std::uint8_t, kScalarSize> q = [] {
    return ec::from_bn(ec::curve().order.get()).bytes;
  }();
  return q;
}

bool in_range(const Scalar& s) { return s.bytes < order_bytes(); }

Scalar random_scalar(RandomSource& rng) {
  for (;;) {
    Scalar s;
    rng.fill(s.bytes);
    if (in_range(s)) return s;
  }
}

Scalar random_nonzero_scalar(RandomSource& rng) {
  for (;;) {
    Scalar s = random_scalar(rng);
    if (!s.is_zero()) return s;
  }
}

Scalar add(const Scalar& a, const Scalar& b) {
  auto ctx = ec::new_ctx();
  auto x = ec::to_bn(a);
  auto y = ec::to_bn(b);
  auto r = ec::new_bn();
  ec::check(BN_mod_add(r.get(), x.get(), y.get(), ec::curve().order.get(), ctx.get()), "BN_mod_add");
  return ec::from_bn(r.get());
}

Scalar negate(const Scalar& a) {
  auto ctx = ec::new_ctx();
  auto x = ec::to_bn(a);
  auto r = ec::new_bn();
  auto zero = ec::new_bn();
  BN_zero(zero.get());
  ec::check(BN_mod_sub(r.get(), zero.get(), x.get(), ec::curve().order.get(), ctx.get()), "BN_mod_sub");
  return ec::from_bn(r.get());
}

GroupElement generator() {
  auto ctx = ec::new_ctx();
  return ec::encode(EC_GROUP_get0_generator(ec::curve().group), ctx.get());
}

GroupElement identity() { return GroupElement{}; }

bool is_member(const GroupElement& e) {
  auto ctx = ec::new_ctx();
  return ec::decode(e, ctx.get()) != nullptr;
}

GroupElement add(const GroupElement& a, const GroupElement& b) {
  auto ctx = ec::new_ctx();
  auto p = ec::decode(a, ctx.get());
  auto q = ec::decode(b, ctx.get());
  if (!p || !q) throw std::invalid_argument("group add: operand is not a group element");
  auto r = ec::new_point();
  ec::check(EC_POINT_add(ec::curve().group, r.get(), p.get(), q.get(), ctx.get()), "EC_POINT_add");
  return ec::encode(r.get(), ctx.get());
}

GroupElement multiply(const GroupElement& base, const Scalar& k) {
  auto ctx = ec::new_ctx();
  auto p = ec::decode(base, ctx.get());
  if (!p) throw std::invalid_argument("group multiply: base is not a group element");
  auto kb = ec::to_bn(k);
  auto r = ec::new_point();
  ec::check(EC_POINT_mul(ec::curve().group, r.get(), nullptr, p.get(), kb.get(), ctx.get()), "EC_POINT_mul");
  return ec::encode(r.get(), ctx.get());
}

GroupElement hash_to_group(std::string_view domain) {
  auto ctx = ec::new_ctx();
  for (std::uint32_t counter = 0;; ++counter) {
    Bytes input;
    put_bytes(input, as_view(domain));
    put_u32(input, counter);
    GroupElement candidate;
    candidate.bytes[0] = 0x02;
    SHA256(input.data(), input.size(), candidate.bytes.data() + 1);
    if (ec::decode(candidate, ctx.get())) return candidate;
  }
}

}  // namespace group
}  // namespace aidwallet
