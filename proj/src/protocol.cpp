#include "aidwallet/protocol.hpp"

namespace aidwallet {

namespace {

template <typename T>
std::optional<T> decode_fixed(const Frame& f, FrameType type, std::size_t size, T (*parse)(ByteReader&)) {
  if (f.type != type || f.payload.size() != size) return std::nullopt;
  ByteReader r(f.payload);
  return parse(r);
}

TransactionProof read_proof(ByteReader& r) {
  TransactionProof p;
  p.sigma = r.array<kSignatureSize>();
  p.tau = r.array<16>();
  p.com.element.bytes = r.array<kElementSize>();
  p.r.r.bytes = r.array<kScalarSize>();
  return p;
}

SignedBalance read_signed_balance(ByteReader& r) {
  SignedBalance b;
  b.balance = r.u32();
  b.nonce = r.array<16>();
  b.sigma = r.array<kSignatureSize>();
  return b;
}

}  // namespace

Bytes spend_message(const Tag& tau, Epoch epoch, const Commitment& com) {
  Bytes out(tau.begin(), tau.end());
  put_u32(out, epoch);
  put_bytes(out, com.element.bytes);
  return out;
}

Bytes running_balance_message(std::uint32_t balance, const std::array<std::uint8_t, 16>& nonce, Epoch epoch) {
  Bytes out{'R', 'B'};
  put_u32(out, balance);
  put_bytes(out, nonce);
  put_u32(out, epoch);
  return out;
}

Bytes tag_input(HouseholdId id, Counter ctr) {
  Bytes out;
  put_u32(out, id);
  put_u16(out, ctr);
  return out;
}

Frame encode_announcement(const PriceAnnouncement& a) {
  Bytes p;
  put_u16(p, a.price);
  put_u32(p, a.epoch);
  return {FrameType::kPriceAnnounce, std::move(p)};
}

Bytes proof_bytes(const TransactionProof& p) {
  Bytes out;
  out.reserve(TransactionProof::kWireSize);
  put_bytes(out, p.sigma);
  put_bytes(out, p.tau);
  put_bytes(out, p.com.element.bytes);
  put_bytes(out, p.r.r.bytes);
  return out;
}

Frame encode_proof(const TransactionProof& p) { return {FrameType::kProof, proof_bytes(p)}; }

Frame encode_register_id(HouseholdId id) {
  Bytes p;
  put_u32(p, id);
  return {FrameType::kRegisterId, std::move(p)};
}

Frame encode_register_secret(const SigningSecret& s) {
  return {FrameType::kRegisterSecret, Bytes(s.d.bytes.begin(), s.d.bytes.end())};
}

Frame encode_register_budget(const RegisterBudget& b) {
  Bytes p;
  put_u16(p, b.budget);
  put_u8(p, b.flags);
  put_u32(p, b.period);
  return {FrameType::kRegisterBudget, std::move(p)};
}

Bytes signed_balance_bytes(const SignedBalance& b) {
  Bytes out;
  put_u32(out, b.balance);
  put_bytes(out, b.nonce);
  put_bytes(out, b.sigma);
  return out;
}

Frame encode_vendor_balance(const std::optional<SignedBalance>& b) {
  return {FrameType::kVendorBalance, b ? signed_balance_bytes(*b) : Bytes{}};
}

Frame encode_signed_balance(const SignedBalance& b) { return {FrameType::kSignedBalance, signed_balance_bytes(b)}; }

std::optional<PriceAnnouncement> decode_announcement(const Frame& f) {
  return decode_fixed<PriceAnnouncement>(f, FrameType::kPriceAnnounce, 6, [](ByteReader& r) {
    PriceAnnouncement a;
    a.price = r.u16();
    a.epoch = r.u32();
    return a;
  });
}

std::optional<TransactionProof> decode_proof(const Frame& f) {
  return decode_fixed<TransactionProof>(f, FrameType::kProof, TransactionProof::kWireSize, read_proof);
}

std::optional<TransactionProof> decode_proof_bytes(ByteView bytes) {
  if (bytes.size() != TransactionProof::kWireSize) return std::nullopt;
  ByteReader r(bytes);
  return read_proof(r);
}

std::optional<HouseholdId> decode_register_id(const Frame& f) {
  return decode_fixed<HouseholdId>(f, FrameType::kRegisterId, 4, [](ByteReader& r) { return r.u32(); });
}

std::optional<SigningSecret> decode_register_secret(const Frame& f) {
  return decode_fixed<SigningSecret>(f, FrameType::kRegisterSecret, kScalarSize, [](ByteReader& r) {
    return SigningSecret{Scalar{r.array<kScalarSize>()}};
  });
}

std::optional<RegisterBudget> decode_register_budget(const Frame& f) {
  return decode_fixed<RegisterBudget>(f, FrameType::kRegisterBudget, 7, [](ByteReader& r) {
    RegisterBudget b;
    b.budget = r.u16();
    b.flags = r.u8();
    b.period = r.u32();
    return b;
  });
}

std::optional<std::optional<SignedBalance>> decode_vendor_balance(const Frame& f) {
  if (f.type != FrameType::kVendorBalance) return std::nullopt;
  if (f.payload.empty()) return std::optional<SignedBalance>{};
  auto b = decode_signed_balance_bytes(f.payload);
  if (!b) return std::nullopt;
  return std::optional<SignedBalance>{*b};
}

std::optional<SignedBalance> decode_signed_balance(const Frame& f) {
  return decode_fixed<SignedBalance>(f, FrameType::kSignedBalance, SignedBalance::kWireSize, read_signed_balance);
}

std::optional<SignedBalance> decode_signed_balance_bytes(ByteView bytes) {
  if (bytes.size() != SignedBalance::kWireSize) return std::nullopt;
  ByteReader r(bytes);
  return read_signed_balance(r);
}

}  // namespace aidwallet
