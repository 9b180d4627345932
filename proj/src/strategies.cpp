#include <algorithm>
#include <cstdlib>

#include "aidwallet/harness.hpp"

namespace aidwallet::harness {
namespace {

constexpr Epoch kEpoch = 1;

Amount uniform_amount(RandomSource& rng, Amount lo, Amount hi) {
  return static_cast<Amount>(lo + rng.uniform(static_cast<std::uint64_t>(hi - lo) + 1));
}

/// Adversary as vendor: runs one spend through its own terminal and keeps the
/// proof if the card produced one.
std::optional<LedgerEntry> collect(World& w, CardId card, Amount price, Epoch epoch) {
  auto terminal = adversary_terminal(w.db(), price, epoch);
  auto r = w.o_spend_mal_vendor(epoch, card, price, *terminal);
  if (!r || !r->success()) return std::nullopt;
  for (const Frame& f : terminal->received()) {
    if (auto p = decode_proof(f)) return LedgerEntry{price, *p};
  }
  return std::nullopt;
}

/// Adversary as user: reads the announcement and answers with `answer`.
bool deliver(World& w, Epoch epoch, Amount amount, const Frame& answer) {
  return w.o_spend_mal_user(epoch, amount, [&](CardTerminal& vendor) {
    vendor.receive();
    vendor.send(answer);
  });
}

/// Confirms a registration without storing anything: the household exists at
/// the station, its budget counts as malicious, the adversary holds no key.
void confirm_only(CardTerminal& station) {
  for (int i = 0; i < 3; ++i) station.receive();
  station.send(Frame{FrameType::kRegisterDone, {}});
}

std::optional<ReclaimClaim> honest_claim(Epoch epoch, const std::vector<LedgerEntry>& entries) {
  if (entries.empty()) return std::nullopt;
  ReclaimProof proof = create_reclaim_proof(epoch, entries);
  return ReclaimClaim{epoch, proof.claimed_total, std::move(proof)};
}

/// Registers `households` households with `cards` cards each and collects
/// proofs from a handful of spends. The first spend of each household fits
/// its budget, so at least one proof exists.
std::vector<LedgerEntry> collect_some(World& w, RandomSource& rng, int households, std::uint32_t cards,
                                      Epoch epoch = kEpoch) {
  std::vector<LedgerEntry> out;
  for (int h = 0; h < households; ++h) {
    const Amount bud = uniform_amount(rng, 50, 500);
    const auto ids = w.o_hreg(bud, cards);
    const int spends = 1 + static_cast<int>(rng.uniform(4));
    for (int i = 0; i < spends; ++i) {
      const CardId card = ids[rng.uniform(ids.size())];
      const Amount price = uniform_amount(rng, 1, static_cast<Amount>(bud / 4));
      if (auto e = collect(w, card, price, epoch)) out.push_back(*e);
    }
  }
  return out;
}

/// A proof for `amount` whose signature is random bytes or made under the
/// adversary's own key.
TransactionProof forged_proof(Amount amount, Epoch epoch, RandomSource& rng) {
  TransactionProof p;
  p.tau = rng.bytes<16>();
  p.r = pedersen::random_opening(rng);
  p.com = pedersen::commit(pedersen::setup(), amount, p.r);
  if (rng.coin()) {
    p.sigma = rng.bytes<kSignatureSize>();
  } else {
    const SigningKeyPair own = ds::keygen(rng);
    p.sigma = ds::sign(own.secret, spend_message(p.tau, epoch, p.com), rng);
  }
  return p;
}

// ---------------------------------------------------------------------------
// honest-baseline

Epoch sec_honest(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 1 + static_cast<std::uint32_t>(rng.uniform(3)));
  const int spends = 1 + static_cast<int>(rng.uniform(8));
  for (int i = 0; i < spends; ++i) {
    w.o_spend(kEpoch, ids[rng.uniform(ids.size())], uniform_amount(rng, 1, static_cast<Amount>(bud / 2)));
  }
  return kEpoch;
}

std::optional<ReclaimClaim> recl_honest(World& w, RandomSource& rng) {
  return honest_claim(kEpoch, collect_some(w, rng, 1 + static_cast<int>(rng.uniform(3)), 1));
}

class IndHonest : public IndAdversary {
 public:
  IndChallenge choose(World& w, RandomSource& rng) override {
    const Amount bud = uniform_amount(rng, 50, 500);
    w.o_cstation_reg({1001}, bud, nullptr);
    w.o_cstation_reg({1002}, bud, nullptr);
    return {1001, 1002, uniform_amount(rng, 1, bud), kEpoch};
  }
  int guess(World&, RandomSource& rng) override { return rng.coin() ? 1 : 0; }
};

/// Worlds differ only in which household made the single purchase.
class AudpHonest : public AudpAdversary {
 public:
  Epoch build(SplitWorld& worlds, RandomSource& rng) override {
    const Amount price = uniform_amount(rng, 1, 100);
    for (int world = 0; world < 2; ++world) {
      const auto a = worlds.o_reg(world, 100, 1);
      const auto b = worlds.o_reg(world, 100, 1);
      worlds.o_spend(world, kEpoch, world == 0 ? a[0] : b[0], price);
    }
    return kEpoch;
  }
  int guess(const ReclaimProof&, RandomSource& rng) override { return rng.coin() ? 1 : 0; }
};

// ---------------------------------------------------------------------------
// proof-replay

Epoch sec_replay(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 2);
  const Amount price = uniform_amount(rng, 1, bud);
  auto e = collect(w, ids[0], price, kEpoch);
  if (!e) return kEpoch;
  const Frame frame = encode_proof(e->proof);
  const int replays = 2 + static_cast<int>(rng.uniform(4));
  for (int i = 0; i < replays; ++i) deliver(w, kEpoch, price, frame);
  deliver(w, kEpoch + 1, price, frame);
  return kEpoch;
}

/// Proofs from one period claimed for another.
std::optional<ReclaimClaim> recl_replay(World& w, RandomSource& rng) {
  const auto entries = collect_some(w, rng, 2, 1, kEpoch);
  if (entries.empty()) return std::nullopt;
  ReclaimProof proof = create_reclaim_proof(kEpoch + 1, entries);
  return ReclaimClaim{kEpoch + 1, proof.claimed_total, std::move(proof)};
}

// ---------------------------------------------------------------------------
// total-inflation

Epoch sec_inflation(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 1);
  const Amount price = uniform_amount(rng, 1, static_cast<Amount>(bud / 2));
  auto e = collect(w, ids[0], price, kEpoch);
  if (!e) return kEpoch;
  const Amount inflated = static_cast<Amount>(price + uniform_amount(rng, 1, 1000));
  deliver(w, kEpoch, inflated, encode_proof(e->proof));
  return kEpoch;
}

std::optional<ReclaimClaim> recl_inflation(World& w, RandomSource& rng) {
  auto claim = honest_claim(kEpoch, collect_some(w, rng, 2, 1));
  if (!claim) return claim;
  const std::uint64_t extra = 1 + rng.uniform(1000);
  claim->spent_sum += extra;
  claim->proof.claimed_total += extra;
  return claim;
}

// ---------------------------------------------------------------------------
// signature-forgery

Epoch sec_forgery(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  w.o_mal_user_reg(bud, confirm_only);
  const int attempts = 1 + static_cast<int>(rng.uniform(4));
  for (int i = 0; i < attempts; ++i) {
    const Amount amount = static_cast<Amount>(bud + uniform_amount(rng, 1, 1000));
    deliver(w, kEpoch, amount, encode_proof(forged_proof(amount, kEpoch, rng)));
  }
  return kEpoch;
}

std::optional<ReclaimClaim> recl_forgery(World& w, RandomSource& rng) {
  auto entries = collect_some(w, rng, 1, 1);
  const Amount bud = uniform_amount(rng, 50, 500);
  w.o_mal_user_reg(bud, confirm_only);
  const Amount amount = static_cast<Amount>(bud + uniform_amount(rng, 1, 1000));
  entries.push_back(LedgerEntry{amount, forged_proof(amount, kEpoch, rng)});
  return honest_claim(kEpoch, entries);
}

// ---------------------------------------------------------------------------
// duplicate-item

Epoch sec_duplicate(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 2);
  auto a = collect(w, ids[0], uniform_amount(rng, 1, static_cast<Amount>(bud / 2)), kEpoch);
  auto b = collect(w, ids[1], uniform_amount(rng, 1, static_cast<Amount>(bud / 2)), kEpoch);
  if (!a || !b) return kEpoch;
  deliver(w, kEpoch, a->spent, encode_proof(a->proof));
  deliver(w, kEpoch, a->spent, encode_proof(a->proof));
  // a's commitment and opening under b's tag.
  TransactionProof spliced = a->proof;
  spliced.tau = b->proof.tau;
  deliver(w, kEpoch, a->spent, encode_proof(spliced));
  return kEpoch;
}

std::optional<ReclaimClaim> recl_duplicate(World& w, RandomSource& rng) {
  auto entries = collect_some(w, rng, 2, 1);
  if (entries.empty()) return std::nullopt;
  entries.push_back(entries[rng.uniform(entries.size())]);
  return honest_claim(kEpoch, entries);
}

// ---------------------------------------------------------------------------
// mitm-relay

Frame flip_last_byte(const Frame& f) {
  Frame out = f;
  if (!out.payload.empty()) out.payload.back() ^= 0x01;
  return out;
}

Epoch sec_mitm(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 1);
  const int rounds = 1 + static_cast<int>(rng.uniform(4));
  for (int i = 0; i < rounds; ++i) {
    const Amount amount = uniform_amount(rng, 1, static_cast<Amount>(bud / 4));
    const auto mode = rng.uniform(4);
    TamperEvidentRelay::Tamper tamper;
    if (mode == 1) {
      tamper = [](const Frame& f) { return f.type == FrameType::kPriceAnnounce ? flip_last_byte(f) : f; };
    } else if (mode == 2) {
      tamper = [](const Frame& f) { return f.type == FrameType::kProof ? flip_last_byte(f) : f; };
    } else if (mode == 3) {
      tamper = [](const Frame& f) { return f.type == FrameType::kPath ? flip_last_byte(f) : f; };
    }
    w.o_spend_mal_user(kEpoch, amount, [&](CardTerminal& vendor) {
      TamperEvidentRelay relay(vendor, tamper);
      w.o_spend_mal_vendor(kEpoch, ids[0], amount, relay);
    });
  }
  return kEpoch;
}

/// Relayed proof with its commitment re-made for a larger amount.
std::optional<ReclaimClaim> recl_mitm(World& w, RandomSource& rng) {
  auto entries = collect_some(w, rng, 1, 1);
  if (entries.empty()) return std::nullopt;
  LedgerEntry& target = entries[rng.uniform(entries.size())];
  target.spent = static_cast<Amount>(target.spent + uniform_amount(rng, 1, 1000));
  target.proof.com = pedersen::commit(pedersen::setup(), target.spent, target.proof.r);
  return honest_claim(kEpoch, entries);
}

// ---------------------------------------------------------------------------
// db-rewind

Epoch sec_rewind(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 2);
  const auto snapshot = w.server().snapshot();
  auto a = collect(w, ids[0], bud, kEpoch);
  w.server().restore(snapshot);
  auto b = collect(w, ids[1], bud, kEpoch);
  if (a) deliver(w, kEpoch, bud, encode_proof(a->proof));
  if (b) deliver(w, kEpoch, bud, encode_proof(b->proof));
  collect(w, ids[0], 1, kEpoch);
  return kEpoch;
}

std::optional<ReclaimClaim> recl_rewind(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 2);
  const auto snapshot = w.server().snapshot();
  std::vector<LedgerEntry> entries;
  if (auto a = collect(w, ids[0], bud, kEpoch)) entries.push_back(*a);
  w.server().restore(snapshot);
  if (auto b = collect(w, ids[1], bud, kEpoch)) entries.push_back(*b);
  return honest_claim(kEpoch, entries);
}

/// Rolls the database back to its state between the two challenges, replays
/// both challenge cards, and probes household 0 with its unused card.
class IndRewind : public IndAdversary {
 public:
  IndChallenge choose(World& w, RandomSource& rng) override {
    budget_ = uniform_amount(rng, 50, 500);
    w.o_cstation_reg({2001, 2002}, budget_, nullptr);
    w.o_cstation_reg({2101, 2102}, budget_, nullptr);
    return {2001, 2101, budget_, kEpoch};
  }

  void between(World& w, RandomSource&) override { snapshot_ = w.server().snapshot(); }

  int guess(World& w, RandomSource&) override {
    w.server().restore(snapshot_);
    collect(w, 2001, budget_, kEpoch);
    collect(w, 2101, budget_, kEpoch);
    return collect(w, 2002, budget_, kEpoch) ? 1 : 0;
  }

 private:
  Amount budget_ = 0;
  EncryptedDatabase snapshot_;
};

// ---------------------------------------------------------------------------
// transcript-distinguisher

/// Distance between two spend transcripts: frame shapes, fetched leaves, and
/// ciphertext bytes position by position.
std::uint64_t transcript_distance(const Transcript& a, const Transcript& b) {
  std::uint64_t d = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const Frame& fa = a[i].frame;
    const Frame& fb = b[i].frame;
    if (fa.type != fb.type) d += 1000;
    const std::size_t n = std::min(fa.payload.size(), fb.payload.size());
    d += (fa.payload.size() > n ? fa.payload.size() : fb.payload.size()) - n;
    for (std::size_t j = 0; j < n; ++j) d += fa.payload[j] == fb.payload[j] ? 0 : 1;
  }
  return d;
}

/// Learns one reference transcript per challenge card, then guesses the
/// reference closer to the first challenge transcript.
class IndTranscript : public IndAdversary {
 public:
  IndChallenge choose(World& w, RandomSource& rng) override {
    const Amount bud = uniform_amount(rng, 100, 500);
    w.o_cstation_reg({3001}, bud, &registration_[0]);
    w.o_cstation_reg({3101}, bud, &registration_[1]);
    const Amount probe = uniform_amount(rng, 1, 20);
    for (int i = 0; i < 2; ++i) {
      auto terminal = adversary_terminal(w.db(), probe, kEpoch);
      RecordingTerminal recorder(*terminal);
      w.o_spend_mal_vendor(kEpoch, i == 0 ? 3001 : 3101, probe, recorder);
      reference_[i] = recorder.transcript();
    }
    return {3001, 3101, uniform_amount(rng, 1, 50), kEpoch};
  }

  void observe(int index, const Transcript& t, const SpendResult&) override {
    if (index == 0) challenge_ = t;
  }

  int guess(World&, RandomSource& rng) override {
    const auto d0 = transcript_distance(challenge_, reference_[0]);
    const auto d1 = transcript_distance(challenge_, reference_[1]);
    if (d0 == d1) return rng.coin() ? 1 : 0;
    return d0 < d1 ? 0 : 1;
  }

 private:
  Transcript registration_[2];
  Transcript reference_[2];
  Transcript challenge_;
};

/// Two purchases each, equal totals, different splits; guesses from the
/// first commitment's encoding.
class AudpTranscript : public AudpAdversary {
 public:
  Epoch build(SplitWorld& worlds, RandomSource& rng) override {
    const Amount a = uniform_amount(rng, 10, 60);
    const Amount b = uniform_amount(rng, 10, 60);
    const Amount shift = uniform_amount(rng, 1, 9);
    const Amount prices[2][2] = {{a, b}, {static_cast<Amount>(a + shift), static_cast<Amount>(b - shift)}};
    for (int world = 0; world < 2; ++world) {
      const auto ids = worlds.o_reg(world, 200, 2);
      worlds.o_spend(world, kEpoch, ids[0], prices[world][0]);
      worlds.o_spend(world, kEpoch, ids[1], prices[world][1]);
    }
    return kEpoch;
  }

  int guess(const ReclaimProof& proof, RandomSource&) override {
    return proof.items.front().com.element.bytes.back() & 1;
  }
};

/// One purchase against two with the same total: the count guard must abort.
class AudpUnequalCounts : public AudpAdversary {
 public:
  Epoch build(SplitWorld& worlds, RandomSource& rng) override {
    const Amount a = uniform_amount(rng, 10, 60);
    const Amount b = uniform_amount(rng, 10, 60);
    const auto one = worlds.o_reg(0, 200, 1);
    worlds.o_spend(0, kEpoch, one[0], static_cast<Amount>(a + b));
    const auto two = worlds.o_reg(1, 200, 1);
    worlds.o_spend(1, kEpoch, two[0], a);
    worlds.o_spend(1, kEpoch, two[0], b);
    return kEpoch;
  }
  int guess(const ReclaimProof&, RandomSource& rng) override { return rng.coin() ? 1 : 0; }
};

// ---------------------------------------------------------------------------
// concurrent-household-cards

Epoch sec_concurrent(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 3);
  int failures = 0;
  for (std::size_t i = 0; failures < 3; ++i) {
    const Amount price = uniform_amount(rng, 1, static_cast<Amount>(bud / 3));
    failures = w.o_spend(kEpoch, ids[i % ids.size()], price) ? 0 : failures + 1;
  }
  return kEpoch;
}

std::optional<ReclaimClaim> recl_concurrent(World& w, RandomSource& rng) {
  const Amount bud = uniform_amount(rng, 50, 500);
  const auto ids = w.o_hreg(bud, 3);
  std::vector<LedgerEntry> entries;
  int failures = 0;
  for (std::size_t i = 0; failures < 3; ++i) {
    auto e = collect(w, ids[i % ids.size()], uniform_amount(rng, 1, static_cast<Amount>(bud / 3)), kEpoch);
    if (e) entries.push_back(*e);
    failures = e ? 0 : failures + 1;
  }
  return honest_claim(kEpoch, entries);
}

std::vector<Strategy> build_strategies() {
  std::vector<Strategy> s;
  s.push_back({"honest-baseline", sec_honest, recl_honest, [] { return std::make_unique<IndHonest>(); },
               [] { return std::make_unique<AudpHonest>(); }, false, true, false});
  s.push_back({"proof-replay", sec_replay, recl_replay, nullptr, nullptr, false, false, false});
  s.push_back({"total-inflation", sec_inflation, recl_inflation, nullptr, nullptr, false, false, false});
  s.push_back({"signature-forgery", sec_forgery, recl_forgery, nullptr, nullptr, false, false, false});
  s.push_back({"duplicate-item", sec_duplicate, recl_duplicate, nullptr, nullptr, false, false, false});
  s.push_back({"mitm-relay", sec_mitm, recl_mitm, nullptr, nullptr, false, false, false});
  s.push_back({"db-rewind", sec_rewind, recl_rewind, [] { return std::make_unique<IndRewind>(); }, nullptr, true,
               false, false});
  s.push_back({"transcript-distinguisher", sec_honest, recl_honest,
               [] { return std::make_unique<IndTranscript>(); }, [] { return std::make_unique<AudpTranscript>(); },
               false, true, false});
  s.push_back({"concurrent-household-cards", sec_concurrent, recl_concurrent, nullptr, nullptr, false, true, false});
  return s;
}

}  // namespace

const std::vector<Strategy>& shipped_strategies() {
  static const std::vector<Strategy> strategies = build_strategies();
  return strategies;
}

const Strategy& unequal_count_probe() {
  static const Strategy probe{"audp-unequal-counts", nullptr, nullptr, nullptr,
                              [] { return std::make_unique<AudpUnequalCounts>(); }, false, false, true};
  return probe;
}

const Strategy* find_strategy(std::string_view id) {
  for (const auto& s : shipped_strategies()) {
    if (s.id == id) return &s;
  }
  if (unequal_count_probe().id == id) return &unequal_count_probe();
  return nullptr;
}

}  // namespace aidwallet::harness
