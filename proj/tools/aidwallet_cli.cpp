// aidwallet: run scenarios, benchmark the ORAM variants, run the security
// experiments, and move databases between files.
//
// Exit codes: 0 success, 1 acceptance violation or failed run, 2 usage error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "aidwallet/bench.hpp"
#include "aidwallet/db_file.hpp"
#include "aidwallet/harness.hpp"
#include "aidwallet/scenario.hpp"

namespace {

using namespace aidwallet;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

/// Writes to the file, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto piece = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

std::uint32_t parse_size(const std::string& s) {
  // Accepts plain integers and powers written as 2^k.
  if (s.rfind("2^", 0) == 0) {
    const int k = std::stoi(s.substr(2));
    if (k < 0 || k > 30) throw std::invalid_argument("size out of range: " + s);
    return 1U << k;
  }
  std::size_t used = 0;
  const unsigned long v = std::stoul(s, &used);
  if (used != s.size() || v == 0 || v > (1UL << 30)) throw std::invalid_argument("bad size: " + s);
  return static_cast<std::uint32_t>(v);
}

int cmd_run(const std::string& file, const std::string& log_path, const std::string& reclaim_ledger,
            const std::string& audit_ledger) {
  Scenario scenario;
  try {
    scenario = load_scenario(file);
  } catch (const std::exception& e) {
    std::cerr << "aidwallet run: " << file << ": " << e.what() << "\n";
    return kUsage;
  }
  ScenarioOptions options;
  if (!reclaim_ledger.empty()) options.reclaim_ledger = reclaim_ledger;
  if (!audit_ledger.empty()) options.audit_ledger = audit_ledger;
  const ScenarioReport report = run_scenario(scenario, options);
  emit(log_path, report.log());
  return report.halted ? kViolation : kOk;
}

int cmd_bench(const std::vector<std::string>& variant_args, const std::vector<std::string>& size_args,
              std::uint32_t accesses, std::uint64_t seed, const std::string& out) {
  std::vector<OramVariant> variants;
  std::vector<std::uint32_t> sizes;
  try {
    for (const auto& v : split_list(variant_args)) variants.push_back(parse_variant(v));
    for (const auto& s : split_list(size_args)) sizes.push_back(parse_size(s));
  } catch (const std::exception& e) {
    std::cerr << "aidwallet bench: " << e.what() << "\n";
    return kUsage;
  }
  std::string csv = bench_header() + "\n";
  for (const auto& r : bench_grid(variants, sizes, accesses, seed)) csv += bench_row(r) + "\n";
  emit(out, csv);
  return kOk;
}

int cmd_exp(const std::vector<std::string>& id_args, const std::vector<std::string>& strategy_args,
            std::uint64_t trials, std::uint64_t seed, unsigned threads, const std::string& out) {
  using namespace aidwallet::harness;
  std::vector<ExperimentId> ids;
  for (const auto& name : split_list(id_args)) {
    if (name == "all") {
      ids = {ExperimentId::kSec, ExperimentId::kRecl, ExperimentId::kInd, ExperimentId::kAudp};
      continue;
    }
    auto id = parse_experiment(name);
    if (!id) {
      std::cerr << "aidwallet exp: unknown experiment '" << name << "'\n";
      return kUsage;
    }
    ids.push_back(*id);
  }
  std::vector<const Strategy*> strategies;
  const auto names = split_list(strategy_args);
  if (names.empty()) {
    for (const auto& s : shipped_strategies()) strategies.push_back(&s);
    strategies.push_back(&unequal_count_probe());
  }
  for (const auto& name : names) {
    const Strategy* s = find_strategy(name);
    if (!s) {
      std::cerr << "aidwallet exp: unknown strategy '" << name << "'\n";
      return kUsage;
    }
    strategies.push_back(s);
  }

  ExperimentConfig config;
  config.trials = trials;
  config.seed = seed;
  config.threads = threads;
  std::string csv = results_header() + "\n";
  bool all_passed = true;
  for (ExperimentId id : ids) {
    for (const Strategy* s : strategies) {
      auto r = run_experiment(id, *s, config);
      if (!r) continue;
      csv += results_row(*r) + "\n";
      all_passed = all_passed && r->passed;
    }
  }
  emit(out, csv);
  return all_passed ? kOk : kViolation;
}

int cmd_db(const std::string& action, const std::string& path, const std::string& other, std::uint64_t seed,
           const std::string& variant, std::uint32_t capacity) {
  try {
    if (action == "store") {
      // Fresh database from a seeded trusted setup.
      SeededRandom rng(seed);
      OramConfig config{parse_variant(variant), capacity};
      config.validate();
      db_store(path, trusted_setup(config, rng).db);
      std::cout << "stored " << variant << " N=" << capacity << " to " << path << "\n";
      return kOk;
    }
    const EncryptedDatabase db = db_load(path);
    std::cout << "loaded " << variant_name(db.config.variant) << " N=" << db.config.capacity
              << (db.config.periodic ? " periodic" : "") << " from " << path << "\n";
    if (!other.empty()) {
      db_store(other, db);
      std::cout << "copied to " << other << "\n";
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "aidwallet db " << action << ": " << e.what() << "\n";
    return kViolation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Household aid wallet simulator"};
  app.require_subcommand(1);

  std::string run_file, run_log, run_reclaim, run_audit;
  auto* run = app.add_subcommand("run", "Execute a scenario file and print the event log");
  run->add_option("file", run_file, "Scenario file")->required();
  run->add_option("--log", run_log, "Event log destination (default stdout)");
  run->add_option("--reclaim-ledger", run_reclaim, "Append-only tag file of the reclaim station");
  run->add_option("--audit-ledger", run_audit, "Append-only tag file of the auditor");

  std::vector<std::string> bench_variants{"naive,recursive"};
  std::vector<std::string> bench_sizes{"256,4096,32768"};
  std::uint32_t bench_accesses = 10;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "ORAM transfer cost per access as CSV");
  bench->add_option("--variants", bench_variants, "naive, tree, recursive (comma separated)");
  bench->add_option("--sizes", bench_sizes, "Capacities, e.g. 256,2^15");
  bench->add_option("--accesses", bench_accesses, "Read+write pairs per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Seed");
  bench->add_option("--out", bench_out, "CSV destination (default stdout)");

  std::vector<std::string> exp_ids{"all"};
  std::vector<std::string> exp_strategies;
  std::uint64_t exp_trials = 1000;
  std::uint64_t exp_seed = 1;
  unsigned exp_threads = 0;
  std::string exp_out;
  auto* exp = app.add_subcommand("exp", "Run security experiments; exit 1 if a bound is violated");
  exp->add_option("--ids", exp_ids, "SEC, RECL, IND, AUDP or all (comma separated)");
  exp->add_option("--strategies", exp_strategies, "Strategy ids (default: all)");
  exp->add_option("--trials", exp_trials, "Trials per experiment and strategy")->check(CLI::PositiveNumber);
  exp->add_option("--seed", exp_seed, "Seed");
  exp->add_option("--threads", exp_threads, "Worker threads (0: all cores)");
  exp->add_option("--out", exp_out, "Results CSV destination (default stdout)");

  std::string db_action, db_path, db_copy, db_variant = "naive";
  std::uint64_t db_seed = 1;
  std::uint32_t db_capacity = 256;
  auto* db = app.add_subcommand("db", "Store a fresh database or load (and optionally copy) one");
  db->add_option("action", db_action, "store or load")->required()->check(CLI::IsMember({"store", "load"}));
  db->add_option("path", db_path, "Database file")->required();
  db->add_option("--copy-to", db_copy, "load: write the loaded database back out here");
  db->add_option("--seed", db_seed, "store: setup seed");
  db->add_option("--variant", db_variant, "store: ORAM variant");
  db->add_option("--capacity", db_capacity, "store: household capacity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_file, run_log, run_reclaim, run_audit);
    if (*bench) return cmd_bench(bench_variants, bench_sizes, bench_accesses, bench_seed, bench_out);
    if (*exp) return cmd_exp(exp_ids, exp_strategies, exp_trials, exp_seed, exp_threads, exp_out);
    if (*db) return cmd_db(db_action, db_path, db_copy, db_seed, db_variant, db_capacity);
  } catch (const std::exception& e) {
    std::cerr << "aidwallet: " << e.what() << "\n";
    return kViolation;
  }
  return kUsage;
}
