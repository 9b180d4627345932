#include "aidwallet/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace aidwallet::harness {

// ---------------------------------------------------------------------------
// Terminals

Frame RecordingTerminal::receive() {
  Frame f = inner_.receive();
  transcript_.push_back({Direction::kToClient, f});
  return f;
}

void RecordingTerminal::send(const Frame& frame) {
  transcript_.push_back({Direction::kToServer, frame});
  inner_.send(frame);
}

Frame RecordingTerminal::exchange(const Frame& request) {
  transcript_.push_back({Direction::kToServer, request});
  Frame response = inner_.exchange(request);
  transcript_.push_back({Direction::kToClient, response});
  return response;
}

TamperEvidentRelay::TamperEvidentRelay(CardTerminal& vendor_side, Tamper tamper)
    : vendor_(vendor_side), tamper_(std::move(tamper)) {}

Frame TamperEvidentRelay::pass(const Frame& f) {
  Frame out = tamper_ ? tamper_(f) : f;
  if (out == f) return out;
  tampered_ = true;
  return Frame{FrameType::kError, {}};
}

Frame TamperEvidentRelay::receive() { return pass(vendor_.receive()); }

void TamperEvidentRelay::send(const Frame& frame) { vendor_.send(pass(frame)); }

Frame TamperEvidentRelay::exchange(const Frame& request) {
  Frame forwarded = pass(request);
  if (forwarded.type == FrameType::kError) return forwarded;
  return pass(vendor_.exchange(forwarded));
}

std::unique_ptr<ScriptedTerminal> adversary_terminal(OramChannel& db, Amount price, Epoch epoch) {
  return std::make_unique<ScriptedTerminal>(db, std::vector<Frame>{encode_announcement({price, epoch})});
}

// ---------------------------------------------------------------------------
// World

World::World(const OramConfig& config, RandomPtr rng)
    : rng_(std::move(rng)), setup_(trusted_setup(config, *rng_)), rs_keys_(setup_rs_keys(*rng_)) {
  server_ = std::make_unique<OramServer>(setup_.db);
  db_channel_ = std::make_unique<DirectChannel>(*server_);
  station_ = std::make_unique<RegistrationStation>(rs_keys_, *server_, config.capacity);
  vendor_ = std::make_unique<Vendor>("vendor", rs_keys_.public_key, *server_);
}

CardId World::add_card(const Card& prototype) {
  do {
    ++counter_;
  } while (cards_.count(counter_) != 0);
  cards_[counter_] = std::make_unique<Card>(prototype);
  return counter_;
}

std::vector<CardId> World::o_hreg(Amount bud, std::uint32_t t_nb) {
  Card st(setup_card(rs_keys_.public_key, setup_.sk_t), rng_);
  auto session = station_->allocate(bud);
  if (st.request(*session) != CardStatus::kSuccess) return {};
  bud_[*st.state().household] = bud;
  std::vector<CardId> ids;
  for (std::uint32_t i = 0; i < t_nb; ++i) {
    ids.push_back(add_card(st));
    honest_.insert(ids.back());
  }
  return ids;
}

namespace {

/// Hides the signing key from an adversary playing the card.
class RedactingTerminal final : public CardTerminal {
 public:
  RedactingTerminal(CardTerminal& inner, Transcript* transcript) : inner_(inner), transcript_(transcript) {}

  Frame receive() override {
    Frame f = inner_.receive();
    if (f.type == FrameType::kRegisterSecret) std::fill(f.payload.begin(), f.payload.end(), 0);
    record(Direction::kToClient, f);
    return f;
  }
  void send(const Frame& frame) override {
    record(Direction::kToServer, frame);
    inner_.send(frame);
  }
  Frame exchange(const Frame& request) override {
    record(Direction::kToServer, request);
    Frame r = inner_.exchange(request);
    record(Direction::kToClient, r);
    return r;
  }
  std::unique_lock<std::mutex> open_session() override { return inner_.open_session(); }

 private:
  void record(Direction d, const Frame& f) {
    if (transcript_) transcript_->push_back({d, f});
  }
  CardTerminal& inner_;
  Transcript* transcript_;
};

}  // namespace

std::optional<HouseholdId> World::o_mal_user_reg(Amount bud, const std::function<void(CardTerminal&)>& adversary,
                                                 Transcript* transcript) {
  auto session = station_->allocate(bud);
  RedactingTerminal view(*session, transcript);
  adversary(view);
  auto id = session->household();
  if (id) {
    malicious_.insert(*id);
    bud_[*id] = bud;
  }
  return id;
}

std::vector<CardId> World::o_cstation_reg(const std::vector<CardId>& chosen_ids, Amount bud, Transcript* transcript) {
  Card st(setup_card(rs_keys_.public_key, setup_.sk_t), rng_);
  auto session = station_->allocate(bud);
  RecordingTerminal recorder(*session);
  const CardStatus status = st.request(recorder);
  if (transcript) *transcript = recorder.transcript();
  if (status != CardStatus::kSuccess) return {};
  bud_[*st.state().household] = bud;
  std::vector<CardId> ids;
  for (CardId id : chosen_ids) {
    if (honest_.count(id) != 0) continue;
    cards_[id] = std::make_unique<Card>(st);
    honest_.insert(id);
    ids.push_back(id);
  }
  return ids;
}

bool World::o_spend(Epoch epoch, CardId card, Amount price) {
  auto it = cards_.find(card);
  if (it == cards_.end()) throw std::out_of_range("unknown card id");
  auto session = vendor_->receive(epoch, price);
  const SpendResult r = it->second->spend(price, *session);
  if (!r.success()) return false;
  received_[epoch].push_back(price);
  spent_[epoch].push_back(price);
  if (session->proof()) received_proofs_[epoch].push_back(LedgerEntry{price, *session->proof()});
  return true;
}

bool World::o_spend_mal_user(Epoch epoch, Amount amount, const std::function<void(CardTerminal&)>& adversary) {
  auto session = vendor_->receive(epoch, amount);
  adversary(*session);
  if (!session->accepted()) return false;
  received_[epoch].push_back(amount);
  if (session->proof()) received_proofs_[epoch].push_back(LedgerEntry{amount, *session->proof()});
  return true;
}

std::optional<SpendResult> World::o_spend_mal_vendor(Epoch epoch, CardId card, Amount amount, CardTerminal& terminal) {
  auto it = cards_.find(card);
  if (it == cards_.end() || blocked_.count(card) != 0) return std::nullopt;
  const SpendResult r = it->second->spend(amount, terminal);
  if (r.success() && r.price == amount && r.epoch == epoch) spent_[epoch].push_back(amount);
  return r;
}

std::optional<HouseholdId> World::household_of(CardId card) const {
  auto it = cards_.find(card);
  if (it == cards_.end()) return std::nullopt;
  return it->second->state().household;
}

std::vector<CardId> World::cards_of(HouseholdId household) const {
  std::vector<CardId> out;
  for (const auto& [id, card] : cards_) {
    if (card->state().household == household) out.push_back(id);
  }
  return out;
}

namespace {

std::uint64_t sum_of(const std::map<Epoch, std::vector<Amount>>& m, Epoch e) {
  auto it = m.find(e);
  if (it == m.end()) return 0;
  std::uint64_t s = 0;
  for (Amount a : it->second) s += a;
  return s;
}

}  // namespace

std::uint64_t World::received_sum(Epoch epoch) const { return sum_of(received_, epoch); }
std::uint64_t World::spent_sum(Epoch epoch) const { return sum_of(spent_, epoch); }

std::uint64_t World::malicious_budget() const {
  std::uint64_t s = 0;
  for (HouseholdId id : malicious_) s += bud_.at(id);
  return s;
}

const std::vector<LedgerEntry>& World::received_proofs(Epoch epoch) { return received_proofs_[epoch]; }

// ---------------------------------------------------------------------------
// Split world

SplitWorld::SplitWorld(const OramConfig& config, RandomPtr rng) : rng_(std::move(rng)) {
  rs_keys_ = setup_rs_keys(*rng_);
  auto setup = trusted_setup(config, *rng_);
  sk_t_ = setup.sk_t;
  for (int w = 0; w < 2; ++w) {
    Side& s = sides_[w];
    // Same initial database in both worlds; they diverge from here.
    EncryptedDatabase db = setup.db;
    s.server = std::make_unique<OramServer>(std::move(db));
    s.channel = std::make_unique<DirectChannel>(*s.server);
    s.station = std::make_unique<RegistrationStation>(rs_keys_, *s.server, config.capacity);
    s.vendor = std::make_unique<Vendor>("vendor", rs_keys_.public_key, *s.server);
  }
}

std::vector<CardId> SplitWorld::o_reg(int world, Amount bud, std::uint32_t t_nb) {
  Side& s = sides_[world];
  Card st(setup_card(rs_keys_.public_key, sk_t_), rng_);
  auto session = s.station->allocate(bud);
  if (st.request(*session) != CardStatus::kSuccess) return {};
  std::vector<CardId> ids;
  for (std::uint32_t i = 0; i < t_nb; ++i) {
    ids.push_back(++s.counter);
    s.cards[ids.back()] = std::make_unique<Card>(st);
  }
  return ids;
}

bool SplitWorld::o_spend(int world, Epoch epoch, CardId card, Amount price) {
  Side& s = sides_[world];
  auto it = s.cards.find(card);
  if (it == s.cards.end()) throw std::out_of_range("unknown card id");
  auto session = s.vendor->receive(epoch, price);
  const SpendResult r = it->second->spend(price, *session);
  if (!(r.success() && r.price == price && r.epoch == epoch) || !session->proof()) return false;
  s.received[epoch].push_back(LedgerEntry{price, *session->proof()});
  return true;
}

const std::vector<LedgerEntry>& SplitWorld::received(int world, Epoch epoch) { return sides_[world].received[epoch]; }

// ---------------------------------------------------------------------------
// IND defaults

std::unique_ptr<CardTerminal> IndAdversary::challenge_terminal(World& w, int, const IndChallenge& c) {
  return adversary_terminal(w.db(), c.price, c.epoch);
}

void IndAdversary::observe(int, const Transcript&, const SpendResult&) {}

void IndAdversary::between(World&, RandomSource&) {}

// ---------------------------------------------------------------------------
// Experiments

const char* experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::kSec:
      return "SEC";
    case ExperimentId::kRecl:
      return "RECL";
    case ExperimentId::kInd:
      return "IND";
    case ExperimentId::kAudp:
      return "AUDP";
  }
  return "?";
}

std::optional<ExperimentId> parse_experiment(std::string_view name) {
  std::string upper(name);
  for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper == "SEC") return ExperimentId::kSec;
  if (upper == "RECL") return ExperimentId::kRecl;
  if (upper == "IND") return ExperimentId::kInd;
  if (upper == "AUDP") return ExperimentId::kAudp;
  return std::nullopt;
}

namespace {

struct TrialOutcome {
  bool valid = false;
  bool win = false;
  bool accepted = false;
  bool violation = false;
};

RandomPtr trial_rng(ExperimentId id, const Strategy& s, std::uint64_t seed, std::uint64_t trial) {
  std::string label = std::string(experiment_name(id)) + "/" + s.id + "/" + std::to_string(seed) + "/" +
                      std::to_string(trial);
  return std::make_shared<SeededRandom>(label);
}

TrialOutcome sec_trial(const Strategy& s, const ExperimentConfig& cfg, RandomPtr rng) {
  World w(cfg.oram, rng);
  const Epoch target = s.sec(w, *rng);
  TrialOutcome out;
  out.valid = true;
  out.win = w.received_sum(target) > w.spent_sum(target) + w.malicious_budget();
  return out;
}

TrialOutcome recl_trial(const Strategy& s, const ExperimentConfig& cfg, RandomPtr rng) {
  World w(cfg.oram, rng);
  auto claim = s.recl(w, *rng);
  TrialOutcome out;
  out.valid = true;
  if (!claim) return out;
  TagLedger ledger;
  const ReclaimVerdict v =
      verify_reclaim_proof(w.rs_keys().public_key, claim->epoch, claim->spent_sum, claim->proof, ledger);
  out.accepted = v == ReclaimVerdict::kAccepted;
  const std::uint64_t spent_max = w.spent_sum(claim->epoch) + w.malicious_budget();
  out.win = out.accepted && claim->spent_sum > spent_max;
  return out;
}

TrialOutcome ind_trial(const Strategy& s, const ExperimentConfig& cfg, RandomPtr rng) {
  World w(cfg.ind_oram, rng);
  auto adv = s.ind();
  const IndChallenge c = adv->choose(w, *rng);
  TrialOutcome out;
  if (!w.is_honest(c.t0) || !w.is_honest(c.t1)) return out;

  const int b = rng->coin() ? 1 : 0;
  const CardId order[2] = {b == 0 ? c.t0 : c.t1, b == 0 ? c.t1 : c.t0};
  std::set<CardId> restricted;
  for (CardId t : {c.t0, c.t1}) {
    for (CardId sibling : w.cards_of(*w.household_of(t))) restricted.insert(sibling);
  }

  bool success[2] = {false, false};
  for (int i = 0; i < 2; ++i) {
    auto terminal = adv->challenge_terminal(w, i, c);
    RecordingTerminal recorder(*terminal);
    const SpendResult r = w.card(order[i]).spend(c.price, recorder);
    adv->observe(i, recorder.transcript(), r);
    if (r.success() && (r.price != c.price || r.epoch != c.epoch)) return out;
    success[i] = r.success();
    if (i == 0) {
      w.block(restricted);
      adv->between(w, *rng);
      w.unblock();
    }
  }
  if (success[0] != success[1]) return out;

  const int guess = adv->guess(w, *rng);
  out.valid = true;
  out.win = guess == b;
  for (CardId id : restricted) out.violation = out.violation || w.card(id).state().violation;
  return out;
}

TrialOutcome audp_trial(const Strategy& s, const ExperimentConfig& cfg, RandomPtr rng) {
  SplitWorld worlds(cfg.oram, rng);
  auto adv = s.audp();
  const Epoch target = adv->build(worlds, *rng);
  TrialOutcome out;
  const auto& e0 = worlds.received(0, target);
  const auto& e1 = worlds.received(1, target);
  if (e0.empty() || e1.empty()) return out;
  const ReclaimProof p0 = create_reclaim_proof(target, e0);
  const ReclaimProof p1 = create_reclaim_proof(target, e1);
  if (p0.claimed_total != p1.claimed_total || encode_reclaim_proof(p0).size() != encode_reclaim_proof(p1).size()) {
    return out;
  }
  const int b = rng->coin() ? 1 : 0;
  out.valid = true;
  out.win = adv->guess(b == 0 ? p0 : p1, *rng) == b;
  return out;
}

}  // namespace

std::optional<ExperimentResult> run_experiment(ExperimentId id, const Strategy& strategy,
                                               const ExperimentConfig& config) {
  std::function<TrialOutcome(RandomPtr)> trial;
  switch (id) {
    case ExperimentId::kSec:
      if (!strategy.sec) return std::nullopt;
      trial = [&](RandomPtr rng) { return sec_trial(strategy, config, std::move(rng)); };
      break;
    case ExperimentId::kRecl:
      if (!strategy.recl) return std::nullopt;
      trial = [&](RandomPtr rng) { return recl_trial(strategy, config, std::move(rng)); };
      break;
    case ExperimentId::kInd:
      if (!strategy.ind) return std::nullopt;
      trial = [&](RandomPtr rng) { return ind_trial(strategy, config, std::move(rng)); };
      break;
    case ExperimentId::kAudp:
      if (!strategy.audp) return std::nullopt;
      trial = [&](RandomPtr rng) { return audp_trial(strategy, config, std::move(rng)); };
      break;
  }

  std::vector<TrialOutcome> outcomes(config.trials);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint64_t t = next++; t < config.trials; t = next++) {
      try {
        outcomes[t] = trial(trial_rng(id, strategy, config.seed, t));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, config.trials)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  ExperimentResult r;
  r.experiment = experiment_name(id);
  r.strategy = strategy.id;
  r.trials = config.trials;
  r.seed = config.seed;
  for (const auto& o : outcomes) {
    if (!o.valid) {
      ++r.aborts;
      continue;
    }
    ++r.valid;
    r.wins += o.win ? 1 : 0;
    r.accepted += o.accepted ? 1 : 0;
    r.violations += o.violation ? 1 : 0;
  }

  const bool distinguishing = id == ExperimentId::kInd || id == ExperimentId::kAudp;
  if (distinguishing && r.valid > 0) {
    r.advantage = std::fabs(static_cast<double>(r.wins) / static_cast<double>(r.valid) - 0.5);
    r.threshold = 3.0 * std::sqrt(0.25 / static_cast<double>(r.valid));
  }

  switch (id) {
    case ExperimentId::kSec:
      r.passed = r.wins == 0;
      break;
    case ExperimentId::kRecl:
      r.passed = r.wins == 0 && (!strategy.honest || r.accepted == r.valid);
      break;
    case ExperimentId::kInd:
      r.passed = strategy.rewinds ? (r.valid > 0 && r.wins == r.valid && r.violations == r.valid)
                                  : (r.valid > 0 && r.advantage <= r.threshold);
      break;
    case ExperimentId::kAudp:
      r.passed = strategy.expects_abort ? r.aborts == r.trials : (r.valid > 0 && r.advantage <= r.threshold);
      break;
  }
  return r;
}

std::string results_header() {
  return "experiment,strategy,trials,valid,wins,aborts,accepted,violations,advantage,threshold,seed,passed";
}

std::string results_row(const ExperimentResult& r) {
  char adv[32];
  char thr[32];
  std::snprintf(adv, sizeof adv, "%.6f", r.advantage);
  std::snprintf(thr, sizeof thr, "%.6f", r.threshold);
  return r.experiment + "," + r.strategy + "," + std::to_string(r.trials) + "," + std::to_string(r.valid) + "," +
         std::to_string(r.wins) + "," + std::to_string(r.aborts) + "," + std::to_string(r.accepted) + "," +
         std::to_string(r.violations) + "," + adv + "," + thr + "," + std::to_string(r.seed) + "," +
         (r.passed ? "pass" : "fail");
}

}  // namespace aidwallet::harness
