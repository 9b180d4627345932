#include "aidwallet/card.hpp"

#include <algorithm>

#include "aidwallet/db_file.hpp"

namespace aidwallet {

namespace {

constexpr std::array<std::uint8_t, 4> kStateMagic{'A', 'W', 'C', 'S'};

void put_flag(Bytes& out, bool v) { put_u8(out, v ? 1 : 0); }

bool read_flag(ByteReader& r) {
  std::uint8_t v = r.u8();
  if (v > 1) throw DecodeError("bad boolean byte");
  return v == 1;
}

}  // namespace

const char* status_name(CardStatus s) {
  switch (s) {
    case CardStatus::kSuccess:
      return "success";
    case CardStatus::kInsufficientBalance:
      return "insufficient-balance";
    case CardStatus::kIntegrityFailure:
      return "integrity-failure";
    case CardStatus::kRollbackDetected:
      return "rollback-detected";
    case CardStatus::kViolation:
      return "violation";
    case CardStatus::kLocked:
      return "locked";
    case CardStatus::kNotRegistered:
      return "not-registered";
    case CardStatus::kAlreadyRegistered:
      return "already-registered";
    case CardStatus::kRetired:
      return "retired";
    case CardStatus::kBadKey:
      return "bad-key";
    case CardStatus::kBadSignature:
      return "bad-signature";
    case CardStatus::kProtocolError:
      return "protocol-error";
  }
  return "unknown";
}

Bytes serialize_card_state(const CardState& st) {
  Bytes out(kStateMagic.begin(), kStateMagic.end());
  put_u8(out, CardState::kVersion);
  put_bytes(out, st.rs_public.point.bytes);
  put_flag(out, st.rs_secret.has_value());
  if (st.rs_secret) put_bytes(out, st.rs_secret->d.bytes);
  put_bytes(out, st.oram_key.ae.enc);
  put_bytes(out, st.oram_key.ae.mac);
  const OramConfig& c = st.oram_key.config;
  put_u8(out, static_cast<std::uint8_t>(c.variant));
  put_u32(out, c.capacity);
  put_u16(out, c.bucket_size);
  put_u16(out, c.recursion_factor);
  put_flag(out, c.periodic);
  put_bytes(out, st.prf_key.bytes);
  put_flag(out, st.household.has_value());
  if (st.household) put_u32(out, *st.household);
  put_flag(out, st.last_ctr_written.has_value());
  if (st.last_ctr_written) put_u16(out, *st.last_ctr_written);
  put_flag(out, st.violation);
  put_flag(out, st.retired);
  put_flag(out, st.period_policy.has_value());
  if (st.period_policy) {
    put_u8(out, static_cast<std::uint8_t>(st.period_policy->rule));
    put_u16(out, st.period_policy->allowance);
  }
  return out;
}

CardState parse_card_state(ByteView bytes) {
  ByteReader r(bytes);
  if (r.array<4>() != kStateMagic) throw DecodeError("not a card state file");
  if (r.u8() != CardState::kVersion) throw DecodeError("unsupported card state version");
  CardState st;
  st.rs_public.point.bytes = r.array<kElementSize>();
  if (read_flag(r)) st.rs_secret = SigningSecret{Scalar{r.array<kScalarSize>()}};
  st.oram_key.ae.enc = r.array<16>();
  st.oram_key.ae.mac = r.array<16>();
  OramConfig& c = st.oram_key.config;
  std::uint8_t variant = r.u8();
  if (variant > static_cast<std::uint8_t>(OramVariant::kRecursive)) throw DecodeError("unknown ORAM variant");
  c.variant = static_cast<OramVariant>(variant);
  c.capacity = r.u32();
  c.bucket_size = r.u16();
  c.recursion_factor = r.u16();
  c.periodic = read_flag(r);
  st.prf_key.bytes = r.array<16>();
  if (read_flag(r)) st.household = r.u32();
  if (read_flag(r)) st.last_ctr_written = r.u16();
  st.violation = read_flag(r);
  st.retired = read_flag(r);
  if (read_flag(r)) {
    std::uint8_t rule = r.u8();
    if (rule != 1 && rule != 2) throw DecodeError("unknown top-up rule");
    st.period_policy = PeriodPolicy{static_cast<TopUpRule>(rule), r.u16()};
  }
  r.expect_done();
  if (st.rs_secret.has_value() != st.household.has_value()) throw DecodeError("inconsistent registration fields");
  return st;
}

CardState setup_card(const VerificationKey& rs_public, const TrustedSecret& sk_t, std::optional<PeriodPolicy> policy) {
  CardState st;
  st.rs_public = rs_public;
  st.oram_key = sk_t.oram_key;
  st.prf_key = sk_t.prf_key;
  st.period_policy = policy;
  return st;
}

bool detect_rollback(const CardState& st, Counter observed_ctr) {
  return st.last_ctr_written.has_value() && observed_ctr < *st.last_ctr_written;
}

HouseholdRecord apply_period_update(const HouseholdRecord& rec, std::uint16_t current_period,
                                    const PeriodPolicy& policy) {
  if (current_period <= rec.last_period) return rec;
  HouseholdRecord out = rec;
  out.last_period = current_period;
  if (policy.rule == TopUpRule::kResetToAllowance) {
    out.balance = policy.allowance;
  } else {
    const std::uint64_t elapsed = current_period - rec.last_period;
    const std::uint64_t topped = rec.balance + elapsed * policy.allowance;
    out.balance = static_cast<Amount>(std::min<std::uint64_t>(topped, 0xffff));
  }
  return out;
}

Card::Card(CardState state, RandomPtr rng) : state_(std::move(state)), rng_(std::move(rng)) {
  if (!rng_) throw std::invalid_argument("Card needs a randomness source");
}

void Card::attach_state_file(std::filesystem::path path) {
  state_file_ = std::move(path);
  persist();
}

Card Card::load(const std::filesystem::path& path, RandomPtr rng) {
  Card card(parse_card_state(read_file(path)), std::move(rng));
  card.state_file_ = path;
  return card;
}

void Card::persist() {
  if (state_file_) write_file_atomic(*state_file_, serialize_card_state(state_));
}

OramClient& Card::oram() {
  if (!oram_) oram_.emplace(state_.oram_key, rng_);
  return *oram_;
}

CardStatus Card::precheck() const {
  if (!unlocked_) return CardStatus::kLocked;
  if (state_.violation) return CardStatus::kViolation;
  if (state_.retired) return CardStatus::kRetired;
  if (!state_.registered()) return CardStatus::kNotRegistered;
  return CardStatus::kSuccess;
}

CardStatus Card::request(CardTerminal& station) {
  if (!unlocked_) return CardStatus::kLocked;
  if (state_.violation) return CardStatus::kViolation;
  if (state_.registered()) return CardStatus::kAlreadyRegistered;

  auto abort = [&](CardStatus s) {
    station.send(Frame{FrameType::kRegisterAbort, {}});
    return s;
  };

  auto id = decode_register_id(station.receive());
  if (!id) return abort(CardStatus::kProtocolError);
  auto secret = decode_register_secret(station.receive());
  if (!secret || !group::in_range(secret->d) || secret->d.is_zero()) return abort(CardStatus::kBadKey);

  // Sign-then-verify on a fresh random message.
  const Scalar challenge = group::random_scalar(*rng_);
  const Signature sigma = ds::sign(*secret, challenge.bytes, *rng_);
  if (!ds::verify(state_.rs_public, challenge.bytes, sigma)) return abort(CardStatus::kBadKey);

  auto budget = decode_register_budget(station.receive());
  if (!budget) return abort(CardStatus::kProtocolError);

  if (budget->flags & kRegisterInitialWrite) {
    if (*id >= state_.oram_key.config.capacity) return abort(CardStatus::kProtocolError);
    if (state_.oram_key.config.periodic && budget->period > 0xffff) return abort(CardStatus::kProtocolError);
    HouseholdRecord rec{budget->budget, 0, static_cast<std::uint16_t>(budget->period)};
    if (!oram().write(station, *id, rec)) return abort(CardStatus::kIntegrityFailure);
    state_.last_ctr_written = 0;
  }

  state_.rs_secret = *secret;
  state_.household = *id;
  persist();
  station.send(Frame{FrameType::kRegisterDone, {}});
  return CardStatus::kSuccess;
}

CardStatus Card::load_record(CardTerminal& terminal, Epoch epoch, HouseholdRecord& rec) {
  auto read = oram().read(terminal, *state_.household);
  if (!read) return CardStatus::kIntegrityFailure;
  if (detect_rollback(state_, read->ctr)) {
    state_.violation = true;
    persist();
    return CardStatus::kRollbackDetected;
  }
  rec = *read;
  if (state_.oram_key.config.periodic && state_.period_policy) {
    if (epoch > 0xffff) return CardStatus::kProtocolError;
    rec = apply_period_update(rec, static_cast<std::uint16_t>(epoch), *state_.period_policy);
  }
  if (rec.ctr == 0xffff) {
    state_.retired = true;
    persist();
    return CardStatus::kRetired;
  }
  return CardStatus::kSuccess;
}

SpendResult Card::spend(Amount price, CardTerminal& vendor) {
  SpendResult result;
  result.status = precheck();
  if (result.status != CardStatus::kSuccess) return result;

  auto fail = [&](CardStatus s) {
    vendor.send(Frame{FrameType::kSpendAbort, {}});
    result.status = s;
    return result;
  };

  auto announcement = decode_announcement(vendor.receive());
  if (!announcement) return fail(CardStatus::kProtocolError);
  result.price = announcement->price;
  result.epoch = announcement->epoch;
  if (announcement->price != price) return fail(CardStatus::kProtocolError);

  HouseholdRecord rec;
  CardStatus loaded = load_record(vendor, announcement->epoch, rec);
  if (loaded != CardStatus::kSuccess) return fail(loaded);
  if (price > rec.balance) return fail(CardStatus::kInsufficientBalance);

  rec.balance = static_cast<Amount>(rec.balance - price);
  rec.ctr = static_cast<Counter>(rec.ctr + 1);

  const CommitmentParams& params = pedersen::setup();
  TransactionProof proof;
  proof.r = pedersen::random_opening(*rng_);
  proof.com = pedersen::commit(params, static_cast<std::uint64_t>(price), proof.r);
  proof.tau = prf::eval(state_.prf_key, tag_input(*state_.household, rec.ctr));
  proof.sigma = ds::sign(*state_.rs_secret, spend_message(proof.tau, announcement->epoch, proof.com), *rng_);

  if (!oram().write(vendor, *state_.household, rec)) return fail(CardStatus::kIntegrityFailure);
  state_.last_ctr_written = rec.ctr;
  persist();

  vendor.send(encode_proof(proof));
  result.status = CardStatus::kSuccess;
  return result;
}

RunningBalanceResult Card::spend_running_balance(Amount price, CardTerminal& vendor) {
  RunningBalanceResult result;
  result.status = precheck();
  if (result.status != CardStatus::kSuccess) return result;

  auto fail = [&](CardStatus s) {
    vendor.send(Frame{FrameType::kSpendAbort, {}});
    result.status = s;
    return result;
  };

  auto announcement = decode_announcement(vendor.receive());
  if (!announcement || announcement->price != price) return fail(CardStatus::kProtocolError);
  const Epoch epoch = announcement->epoch;

  auto incoming = decode_vendor_balance(vendor.receive());
  if (!incoming) return fail(CardStatus::kProtocolError);
  std::uint32_t base = 0;
  std::array<std::uint8_t, 16> nonce{};
  if (*incoming) {
    const SignedBalance& b = **incoming;
    if (!ds::verify(state_.rs_public, running_balance_message(b.balance, b.nonce, epoch), b.sigma)) {
      return fail(CardStatus::kBadSignature);
    }
    base = b.balance;
    nonce = b.nonce;
  } else {
    nonce = rng_->bytes<16>();
  }
  if (base > 0xffffffffU - price) return fail(CardStatus::kProtocolError);

  HouseholdRecord rec;
  CardStatus loaded = load_record(vendor, epoch, rec);
  if (loaded != CardStatus::kSuccess) return fail(loaded);
  if (price > rec.balance) return fail(CardStatus::kInsufficientBalance);
  rec.balance = static_cast<Amount>(rec.balance - price);
  rec.ctr = static_cast<Counter>(rec.ctr + 1);

  SignedBalance out;
  out.balance = base + price;
  out.nonce = nonce;
  out.sigma = ds::sign(*state_.rs_secret, running_balance_message(out.balance, out.nonce, epoch), *rng_);

  if (!oram().write(vendor, *state_.household, rec)) return fail(CardStatus::kIntegrityFailure);
  state_.last_ctr_written = rec.ctr;
  persist();

  vendor.send(encode_signed_balance(out));
  result.status = CardStatus::kSuccess;
  result.balance = out;
  return result;
}

}  // namespace aidwallet
