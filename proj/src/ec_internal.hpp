#pragma once

// OpenSSL plumbing shared by the group, signature and commitment code.

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include <memory>
#include <stdexcept>

#include "aidwallet/group.hpp"

namespace aidwallet::ec {

struct BnDeleter {
  void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct CtxDeleter {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};

using Bn = std::unique_ptr<BIGNUM, BnDeleter>;
using Point = std::unique_ptr<EC_POINT, PointDeleter>;
using Ctx = std::unique_ptr<BN_CTX, CtxDeleter>;

inline void check(int ok, const char* what) {
  if (ok != 1) throw std::runtime_error(what);
}

/// P-256 parameters, built once.
struct Curve {
  EC_GROUP* group;
  Bn order;
  Curve();
  ~Curve();
  Curve(const Curve&) = delete;
  Curve& operator=(const Curve&) = delete;
};

const Curve& curve();

Bn new_bn();
Point new_point();
Ctx new_ctx();

/// Multiplication by one fixed point through a precomputed table.
class FixedBase {
 public:
  explicit FixedBase(const EC_POINT* base);
  ~FixedBase();
  FixedBase(const FixedBase&) = delete;
  FixedBase& operator=(const FixedBase&) = delete;

  /// out = k1 * G + k2 * base. k1 may be null.
  void multiply(EC_POINT* out, const BIGNUM* k1, const BIGNUM* k2, BN_CTX* ctx) const;

 private:
  EC_GROUP* group_;
};

Bn to_bn(const Scalar& s);
Scalar from_bn(const BIGNUM* bn);
/// Returns nullptr when the encoding is not a group element.
Point decode(const GroupElement& e, BN_CTX* ctx);
GroupElement encode(const EC_POINT* p, BN_CTX* ctx);

}  // namespace aidwallet::ec
