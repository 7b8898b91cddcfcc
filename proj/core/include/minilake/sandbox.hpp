#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "minilake/pipeline.hpp"
#include "minilake/registry.hpp"
#include "minilake/table.hpp"

namespace minilake {

enum class IsolationMode { InProcess, Subprocess };

struct WhitelistResult {
  bool ok = true;
  std::vector<std::string> violations;
};

struct ConflictResult {
  bool ok = true;
  std::string message;
  // The matched rule's sides, used to shape the synthetic traceback.
  std::string a_package;
  std::string b_package;
};

enum class StepStatus { Ok, Failed };

struct StepOutcome {
  StepStatus status = StepStatus::Ok;
  std::optional<Table> output;         // present iff status == Ok
  std::vector<std::string> log_lines;  // non-empty iff status == Failed
};

// Every pinned package must be whitelisted; order of violations follows
// pin order.
WhitelistResult check_whitelist(const EnvSpec& env,
                                const std::set<std::string>& whitelist);

// First conflict rule whose both sides are satisfied by the installed
// set wins; OK when none match.
ConflictResult check_conflicts(const ResolvedEnv& env,
                               const PackageRegistry& registry);

// Worker argv from MINILAKE_WORKER_EXE (the CLI re-invoked with its
// hidden step-worker command); empty when unset.
std::vector<std::string> default_worker_command();

// Runs one pipeline step under a capability contract: the evaluator sees
// only the plan and its input tables (no filesystem, catalog, or network
// handles). Subprocess mode moves evaluation into a child process that
// speaks the length-prefixed frame protocol over stdin/stdout.
class Sandbox {
 public:
  explicit Sandbox(PackageRegistry registry,
                   std::optional<std::set<std::string>> whitelist = std::nullopt,
                   std::vector<std::string> worker_command = default_worker_command(),
                   int timeout_ms = 30'000);

  const PackageRegistry& registry() const { return registry_; }
  const std::optional<std::set<std::string>>& whitelist() const {
    return whitelist_;
  }

  // Absent whitelist file means no restriction.
  WhitelistResult check(const EnvSpec& env) const;

  // Precondition (enforced by callers, asserted in tests): the whitelist
  // gate passed. Conflicts short-circuit to Failed before any
  // evaluation; no output object is produced on any failure path.
  StepOutcome execute_step(const ModelNode& node, const ResolvedEnv& env,
                           const std::map<std::string, Table>& inputs,
                           IsolationMode mode);

  // How many times execute_step ran (the whitelist pre-gate assertion).
  uint64_t execute_calls() const { return execute_calls_.load(); }

 private:
  StepOutcome run_in_subprocess(const ModelNode& node,
                                const std::map<std::string, Table>& inputs);

  PackageRegistry registry_;
  std::optional<std::set<std::string>> whitelist_;
  std::vector<std::string> worker_command_;
  int timeout_ms_;
  std::atomic<uint64_t> execute_calls_{0};
};

}  // namespace minilake
