#include "aidwallet/commitment.hpp"

#include <stdexcept>

#include "ec_internal.hpp"

namespace aidwallet::pedersen {

namespace {

// Decoded h for the fixed parameters; custom parameter sets decode per call.
struct PreparedH {
  GroupElement encoded;
  ec::Point point;
  std::unique_ptr<ec::FixedBase> table;
  PreparedH() {
    encoded = group::hash_to_group(kGeneratorDomain);
    auto ctx = ec::new_ctx();
    point = ec::decode(encoded, ctx.get());
    table = std::make_unique<ec::FixedBase>(point.get());
  }
};

const PreparedH& prepared_h() {
  static const PreparedH h;
  return h;
}

}  // namespace

const CommitmentParams& setup() {
  static const CommitmentParams params = [] {
    CommitmentParams p;
    p.g = group::generator();
    p.h = prepared_h().encoded;
    p.q = group::order_bytes();
    return p;
  }();
  return params;
}

Opening random_opening(RandomSource& rng) { return Opening{group::random_scalar(rng)}; }

Commitment commit(const CommitmentParams& params, const Scalar& m, const Opening& r) {
  if (!group::in_range(m)) throw std::out_of_range("commit: message scalar not below q");
  if (!group::in_range(r.r)) throw std::out_of_range("commit: opening not below q");
  if (params.g != group::generator()) throw std::invalid_argument("commit: unsupported generator g");

  auto ctx = ec::new_ctx();
  ec::Point custom_h;
  const EC_POINT* h = prepared_h().point.get();
  if (params.h != prepared_h().encoded) {
    custom_h = ec::decode(params.h, ctx.get());
    if (!custom_h) throw std::invalid_argument("commit: h is not a group element");
    h = custom_h.get();
  }

  auto mb = ec::to_bn(m);
  auto rb = ec::to_bn(r.r);
  auto out = ec::new_point();
  if (custom_h) {
    ec::check(EC_POINT_mul(ec::curve().group, out.get(), mb.get(), h, rb.get(), ctx.get()), "EC_POINT_mul");
  } else {
    prepared_h().table->multiply(out.get(), mb.get(), rb.get(), ctx.get());
  }
  return Commitment{ec::encode(out.get(), ctx.get())};
}

Commitment commit(const CommitmentParams& params, std::uint64_t m, const Opening& r) {
  return commit(params, Scalar::from_u64(m), r);
}

Commitment combine(std::span<const Commitment> commitments) {
  if (commitments.empty()) throw std::invalid_argument("combine: empty commitment list");
  auto ctx = ec::new_ctx();
  auto acc = ec::decode(commitments.front().element, ctx.get());
  if (!acc) throw std::invalid_argument("combine: not a group element");
  for (std::size_t i = 1; i < commitments.size(); ++i) {
    auto p = ec::decode(commitments[i].element, ctx.get());
    if (!p) throw std::invalid_argument("combine: not a group element");
    ec::check(EC_POINT_add(ec::curve().group, acc.get(), acc.get(), p.get(), ctx.get()), "EC_POINT_add");
  }
  return Commitment{ec::encode(acc.get(), ctx.get())};
}

Opening sum_openings(std::span<const Opening> openings) {
  auto ctx = ec::new_ctx();
  auto acc = ec::new_bn();
  BN_zero(acc.get());
  for (const Opening& o : openings) {
    auto v = ec::to_bn(o.r);
    ec::check(BN_mod_add(acc.get(), acc.get(), v.get(), ec::curve().order.get(), ctx.get()), "BN_mod_add");
  }
  return Opening{ec::from_bn(acc.get())};
}

}  // namespace aidwallet::pedersen
