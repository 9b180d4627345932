#include "aidwallet/scenario.hpp"

#include <charconv>
#include <sstream>

#include "aidwallet/db_file.hpp"

namespace aidwallet {
namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

template <typename T>
T parse_number(std::size_t line, std::string_view field, std::string_view what) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || end != field.data() + field.size() || v > std::numeric_limits<T>::max()) {
    throw ScenarioError(line, "bad " + std::string(what) + " '" + std::string(field) + "'");
  }
  return static_cast<T>(v);
}

/// "key=value" -> value, or nullopt if the key differs.
std::optional<std::string_view> keyed(std::string_view field, std::string_view key) {
  if (field.size() <= key.size() || field.substr(0, key.size()) != key || field[key.size()] != '=') {
    return std::nullopt;
  }
  return field.substr(key.size() + 1);
}

void expect_arity(std::size_t line, const std::vector<std::string>& f, std::size_t lo, std::size_t hi) {
  if (f.size() < lo || f.size() > hi) throw ScenarioError(line, "wrong number of fields for '" + f[0] + "'");
}

std::optional<std::uint32_t> optional_period(std::size_t line, const std::vector<std::string>& f, std::size_t at) {
  if (f.size() <= at) return std::nullopt;
  auto v = keyed(f[at], "period");
  if (!v) throw ScenarioError(line, "expected period=<p>, got '" + f[at] + "'");
  return parse_number<std::uint32_t>(line, *v, "period");
}

void parse_config(std::size_t line, const std::vector<std::string>& f, Scenario& s) {
  bool have_variant = false;
  bool have_capacity = false;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (auto v = keyed(f[i], "variant")) {
      try {
        s.config.variant = parse_variant(*v);
      } catch (const std::exception&) {
        throw ScenarioError(line, "unknown variant '" + std::string(*v) + "'");
      }
      have_variant = true;
    } else if (auto c = keyed(f[i], "capacity")) {
      s.config.capacity = parse_number<std::uint32_t>(line, *c, "capacity");
      have_capacity = true;
    } else if (auto p = keyed(f[i], "periodic")) {
      const auto colon = p->find(':');
      if (colon == std::string_view::npos) throw ScenarioError(line, "expected periodic=<add|reset>:<allowance>");
      const auto rule = p->substr(0, colon);
      PeriodPolicy policy;
      if (rule == "add") {
        policy.rule = TopUpRule::kAddAllowance;
      } else if (rule == "reset") {
        policy.rule = TopUpRule::kResetToAllowance;
      } else {
        throw ScenarioError(line, "unknown top-up rule '" + std::string(rule) + "'");
      }
      policy.allowance = parse_number<Amount>(line, p->substr(colon + 1), "allowance");
      s.policy = policy;
      s.config.periodic = true;
    } else {
      throw ScenarioError(line, "unknown config field '" + f[i] + "'");
    }
  }
  if (!have_variant || !have_capacity) throw ScenarioError(line, "config needs variant= and capacity=");
  try {
    s.config.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(line, e.what());
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  bool have_seed = false;
  bool have_config = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string_view view = raw;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const std::string line = trim(view);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    const std::string& verb = f[0];

    if (verb == "seed") {
      expect_arity(line_no, f, 2, 2);
      if (have_seed || !s.actions.empty()) throw ScenarioError(line_no, "seed must come first and only once");
      s.seed = parse_number<std::uint64_t>(line_no, f[1], "seed");
      have_seed = true;
      continue;
    }
    if (verb == "config") {
      if (have_config || !s.actions.empty()) throw ScenarioError(line_no, "config must precede actions");
      parse_config(line_no, f, s);
      have_config = true;
      continue;
    }
    if (!have_seed || !have_config) throw ScenarioError(line_no, "seed and config must precede actions");

    ScenarioAction a;
    a.line = line_no;
    a.text = line;
    if (verb == "register") {
      expect_arity(line_no, f, 4, 5);
      a.kind = ScenarioAction::Kind::kRegister;
      a.household = f[1];
      a.amount = parse_number<Amount>(line_no, f[2], "budget");
      a.cards = parse_number<std::uint32_t>(line_no, f[3], "card count");
      if (a.cards == 0) throw ScenarioError(line_no, "a household needs at least one card");
      a.period = optional_period(line_no, f, 4);
    } else if (verb == "spend") {
      expect_arity(line_no, f, 5, 5);
      a.kind = ScenarioAction::Kind::kSpend;
      const auto dot = f[1].rfind('.');
      if (dot == std::string::npos || dot == 0) throw ScenarioError(line_no, "expected <household>.<card>");
      a.household = f[1].substr(0, dot);
      a.card = parse_number<std::uint32_t>(line_no, std::string_view(f[1]).substr(dot + 1), "card index");
      a.amount = parse_number<Amount>(line_no, f[2], "price");
      a.epoch = parse_number<Epoch>(line_no, f[3], "epoch");
      a.name = f[4];
    } else if (verb == "reclaim") {
      expect_arity(line_no, f, 3, 3);
      a.kind = ScenarioAction::Kind::kReclaim;
      a.name = f[1];
      a.epoch = parse_number<Epoch>(line_no, f[2], "epoch");
    } else if (verb == "audit") {
      expect_arity(line_no, f, 2, 2);
      a.kind = ScenarioAction::Kind::kAudit;
      a.epoch = parse_number<Epoch>(line_no, f[1], "epoch");
    } else if (verb == "snapshot" || verb == "restore" || verb == "store-db" || verb == "load-db") {
      expect_arity(line_no, f, 2, 2);
      a.kind = verb == "snapshot"  ? ScenarioAction::Kind::kSnapshot
               : verb == "restore" ? ScenarioAction::Kind::kRestore
               : verb == "store-db" ? ScenarioAction::Kind::kStoreDb
                                    : ScenarioAction::Kind::kLoadDb;
      a.name = f[1];
    } else if (verb == "check-balance") {
      expect_arity(line_no, f, 1, 2);
      a.kind = ScenarioAction::Kind::kCheckBalance;
      a.period = optional_period(line_no, f, 1);
    } else if (verb == "halt-on-error") {
      expect_arity(line_no, f, 1, 1);
      a.kind = ScenarioAction::Kind::kHaltOnError;
    } else {
      throw ScenarioError(line_no, "unknown action '" + verb + "'");
    }
    s.actions.push_back(std::move(a));
  }
  if (!have_seed || !have_config) throw ScenarioError(line_no, "missing seed or config");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_scenario(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string ScenarioReport::log() const {
  std::string out;
  for (const auto& e : events) {
    out += e;
    out += '\n';
  }
  return out;
}

namespace {

struct Household {
  HouseholdId id = 0;
  std::vector<std::unique_ptr<Card>> cards;
};

struct Submitted {
  std::string vendor;
  Epoch epoch = 0;
  ReclaimProof proof;
};

class Runner {
 public:
  Runner(const Scenario& s, const ScenarioOptions& options)
      : scenario_(s),
        rng_(std::make_shared<SeededRandom>(s.seed)),
        setup_(trusted_setup(s.config, *rng_)),
        rs_keys_(setup_rs_keys(*rng_)),
        server_(setup_.db),
        channel_(server_),
        station_(rs_keys_, server_, s.config.capacity),
        reclaim_(rs_keys_.public_key, options.reclaim_ledger),
        auditor_(rs_keys_.public_key, options.audit_ledger),
        trusted_(setup_.sk_t.oram_key, rng_) {}

  ScenarioReport run() {
    for (const auto& a : scenario_.actions) {
      std::string outcome;
      bool ok = true;
      try {
        ok = execute(a, outcome);
      } catch (const std::exception& e) {
        ok = false;
        outcome = std::string("fail ") + e.what();
      }
      report_.events.push_back("L" + std::to_string(a.line) + " " + a.text + " -> " + outcome);
      if (!ok) {
        ++report_.failures;
        if (halt_) {
          report_.halted = true;
          report_.events.push_back("halted");
          break;
        }
      }
    }
    finish();
    return std::move(report_);
  }

 private:
  bool execute(const ScenarioAction& a, std::string& outcome) {
    using Kind = ScenarioAction::Kind;
    switch (a.kind) {
      case Kind::kRegister:
        return do_register(a, outcome);
      case Kind::kSpend:
        return do_spend(a, outcome);
      case Kind::kReclaim:
        return do_reclaim(a, outcome);
      case Kind::kAudit:
        return do_audit(a, outcome);
      case Kind::kSnapshot:
        snapshots_[a.name] = server_.snapshot();
        outcome = "ok";
        return true;
      case Kind::kRestore: {
        auto it = snapshots_.find(a.name);
        if (it == snapshots_.end()) {
          outcome = "fail unknown snapshot";
          return false;
        }
        server_.restore(it->second);
        outcome = "ok";
        return true;
      }
      case Kind::kStoreDb:
        db_store(a.name, server_.database());
        outcome = "ok";
        return true;
      case Kind::kLoadDb: {
        EncryptedDatabase db = db_load(a.name);
        if (!(db.config == scenario_.config)) {
          outcome = "fail config mismatch";
          return false;
        }
        server_.restore(std::move(db));
        outcome = "ok";
        return true;
      }
      case Kind::kCheckBalance:
        return do_check_balance(a, outcome);
      case Kind::kHaltOnError:
        halt_ = true;
        outcome = "ok";
        return true;
    }
    return false;
  }

  bool do_register(const ScenarioAction& a, std::string& outcome) {
    if (households_.count(a.household) != 0) {
      outcome = "fail household exists";
      return false;
    }
    Household h;
    std::vector<Card*> ptrs;
    for (std::uint32_t i = 0; i < a.cards; ++i) {
      h.cards.push_back(std::make_unique<Card>(setup_card(rs_keys_.public_key, setup_.sk_t, scenario_.policy), rng_));
      ptrs.push_back(h.cards.back().get());
    }
    auto id = station_.register_household(a.amount, ptrs, a.period.value_or(0));
    if (!id) {
      outcome = "fail registration aborted";
      return false;
    }
    h.id = *id;
    households_[a.household] = std::move(h);
    outcome = "ok id=" + std::to_string(*id);
    return true;
  }

  bool do_spend(const ScenarioAction& a, std::string& outcome) {
    auto hit = households_.find(a.household);
    if (hit == households_.end() || a.card >= hit->second.cards.size()) {
      outcome = "fail unknown card";
      return false;
    }
    Card& card = *hit->second.cards[a.card];
    auto& vendor = vendor_for(a.name);
    auto session = vendor.receive(a.epoch, a.amount);
    const SpendResult r = card.spend(a.amount, *session);
    if (r.success() && session->accepted()) {
      outcome = "ok";
      return true;
    }
    outcome = std::string("fail ") + status_name(r.status);
    if (r.success()) outcome += std::string(" vendor=") + receive_status_name(session->status());
    if (card.state().violation) outcome += " violation";
    return false;
  }

  bool do_reclaim(const ScenarioAction& a, std::string& outcome) {
    ReclaimOutcome result{a.name, a.epoch, ReclaimVerdict::kEmpty, 0, 0};
    const auto entries = vendor_for(a.name).take_entries(a.epoch);
    if (entries.empty()) {
      report_.reclaims.push_back(result);
      outcome = "fail empty";
      return false;
    }
    ReclaimProof proof = create_reclaim_proof(a.epoch, entries);
    result.total = proof.claimed_total;
    result.items = proof.items.size();
    result.verdict = reclaim_.verify(a.epoch, proof.claimed_total, proof);
    report_.reclaims.push_back(result);
    if (result.verdict != ReclaimVerdict::kAccepted) {
      outcome = std::string("fail ") + verdict_name(result.verdict);
      return false;
    }
    submitted_.push_back({a.name, a.epoch, std::move(proof)});
    outcome = "accepted total=" + std::to_string(result.total) + " items=" + std::to_string(result.items);
    return true;
  }

  bool do_audit(const ScenarioAction& a, std::string& outcome) {
    bool ok = true;
    std::size_t audited = 0;
    for (auto it = submitted_.begin(); it != submitted_.end();) {
      if (it->epoch != a.epoch) {
        ++it;
        continue;
      }
      const ReclaimVerdict v = auditor_.audit(a.epoch, it->proof.claimed_total, it->proof);
      report_.audits.push_back({it->vendor, a.epoch, v});
      outcome += (audited++ == 0 ? "" : " ") + it->vendor + "=" + verdict_name(v);
      ok = ok && v == ReclaimVerdict::kAccepted;
      it = submitted_.erase(it);
    }
    if (audited == 0) outcome = "ok nothing to audit";
    return ok;
  }

  bool do_check_balance(const ScenarioAction& a, std::string& outcome) {
    bool ok = true;
    for (const auto& [label, h] : households_) {
      if (!outcome.empty()) outcome += ' ';
      auto rec = trusted_.read(channel_, h.id);
      if (!rec) {
        outcome += label + "=fail";
        ok = false;
        continue;
      }
      HouseholdRecord shown = *rec;
      if (a.period && scenario_.policy) {
        shown = apply_period_update(shown, static_cast<std::uint16_t>(*a.period), *scenario_.policy);
      }
      outcome += label + "=" + std::to_string(shown.balance);
    }
    if (households_.empty()) outcome = "ok no households";
    return ok;
  }

  Vendor& vendor_for(const std::string& name) {
    auto it = vendors_.find(name);
    if (it == vendors_.end()) {
      it = vendors_.emplace(name, std::make_unique<Vendor>(name, rs_keys_.public_key, server_)).first;
    }
    return *it->second;
  }

  void finish() {
    for (const auto& [name, vendor] : vendors_) {
      for (const auto& [epoch, ledger] : vendor->ledgers()) {
        if (ledger.entries.empty()) continue;
        std::uint64_t total = 0;
        for (const auto& e : ledger.entries) total += e.spent;
        report_.events.push_back("final vendor " + name + " epoch " + std::to_string(epoch) +
                                 " unclaimed items=" + std::to_string(ledger.entries.size()) +
                                 " total=" + std::to_string(total));
      }
    }
    report_.events.push_back("final reclaim-ledger tags=" + std::to_string(reclaim_.tags().size()));
    for (const auto& [label, h] : households_) {
      auto rec = trusted_.read(channel_, h.id);
      if (!rec) {
        report_.events.push_back("final balance " + label + " unreadable");
        continue;
      }
      report_.balances[label] = *rec;
      report_.events.push_back("final balance " + label + " balance=" + std::to_string(rec->balance) +
                               " ctr=" + std::to_string(rec->ctr));
    }
  }

  const Scenario& scenario_;
  RandomPtr rng_;
  TrustedSetupOutput setup_;
  SigningKeyPair rs_keys_;
  OramServer server_;
  DirectChannel channel_;
  RegistrationStation station_;
  ReclaimStation reclaim_;
  Auditor auditor_;
  OramClient trusted_;
  std::map<std::string, Household> households_;
  std::map<std::string, std::unique_ptr<Vendor>> vendors_;
  std::map<std::string, EncryptedDatabase> snapshots_;
  std::vector<Submitted> submitted_;
  bool halt_ = false;
  ScenarioReport report_;
};

}  // namespace

ScenarioReport run_scenario(const Scenario& scenario, const ScenarioOptions& options) {
  return Runner(scenario, options).run();
}

}  // namespace aidwallet
