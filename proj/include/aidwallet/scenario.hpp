#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aidwallet/reclaim.hpp"

namespace aidwallet {

/// Scenario file: one action per line, fields separated by spaces, '#' starts
/// a comment.
///
///   seed <u64>
///   config variant=<naive|tree|recursive> capacity=<N> [periodic=add:<a>|reset:<a>]
///   register <household> <budget> <cards> [period=<p>]
///   spend <household>.<card> <price> <epoch> <vendor>
///   reclaim <vendor> <epoch>
///   audit <epoch>
///   snapshot <label> | restore <label>
///   store-db <path> | load-db <path>
///   check-balance [period=<p>]
///   halt-on-error
///
/// seed and config must precede every other action. Card indices start at 0.
struct ScenarioAction {
  enum class Kind {
    kRegister,
    kSpend,
    kReclaim,
    kAudit,
    kSnapshot,
    kRestore,
    kStoreDb,
    kLoadDb,
    kCheckBalance,
    kHaltOnError,
  };

  Kind kind{};
  std::size_t line = 0;
  std::string text;       // the source line, trimmed
  std::string household;  // register, spend
  std::string name;       // vendor, snapshot label, or path
  std::uint32_t card = 0;
  std::uint32_t cards = 0;
  Amount amount = 0;  // budget or price
  Epoch epoch = 0;
  std::optional<std::uint32_t> period;
};

struct Scenario {
  std::uint64_t seed = 0;
  OramConfig config{OramVariant::kNaive, 256};
  std::optional<PeriodPolicy> policy;
  std::vector<ScenarioAction> actions;
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Throws ScenarioError.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct ReclaimOutcome {
  std::string vendor;
  Epoch epoch = 0;
  ReclaimVerdict verdict = ReclaimVerdict::kEmpty;
  std::uint64_t total = 0;
  std::size_t items = 0;
};

struct AuditOutcome {
  std::string vendor;
  Epoch epoch = 0;
  ReclaimVerdict verdict = ReclaimVerdict::kEmpty;
};

struct ScenarioReport {
  /// One line per executed action, then the final ledgers and balances.
  std::vector<std::string> events;
  std::size_t failures = 0;
  bool halted = false;
  /// Records as stored in the database after the last action.
  std::map<std::string, HouseholdRecord> balances;
  std::vector<ReclaimOutcome> reclaims;
  std::vector<AuditOutcome> audits;

  std::string log() const;
};

struct ScenarioOptions {
  /// Append-only tag files for the reclaim station and the auditor.
  std::optional<std::filesystem::path> reclaim_ledger;
  std::optional<std::filesystem::path> audit_ledger;
};

/// Runs every action against fresh state derived from the scenario seed.
/// Protocol failures are logged and the run continues unless halt-on-error
/// was seen.
ScenarioReport run_scenario(const Scenario& scenario, const ScenarioOptions& options = {});

}  // namespace aidwallet
