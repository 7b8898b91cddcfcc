#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "minilake/catalog.hpp"
#include "json.hpp"

namespace minilake {

enum class GrantKind { Read, Write, Merge, Admin };

// READ and ADMIN take no argument; WRITE carries a prefix-"*" branch
// glob, MERGE an exact branch name.
struct Grant {
  GrantKind kind = GrantKind::Read;
  std::string arg;

  bool operator==(const Grant&) const = default;
};

Grant parse_grant(const std::string& text);
std::string grant_text(const Grant& grant);
// Comma-separated list, e.g. "read,write:run/*,merge:main".
std::vector<Grant> parse_grant_list(const std::string& text);
bool glob_match(const std::string& pattern, const std::string& value);

struct Principal {
  std::string key_id;
  std::vector<Grant> grants;
};

enum class ActionKind { Read, Write, Merge };

struct AuthAction {
  ActionKind kind = ActionKind::Read;
  std::string branch;  // empty for Read
};

struct Decision {
  bool allowed = false;
  std::string reason;
};

// Pure grant evaluation: ADMIN allows everything; WRITE matches its
// glob; MERGE needs the exact branch or a WRITE glob covering the
// target (so a key confined to debug/* can promote runs into its own
// debug branches while main still demands an explicit grant).
Decision authorize(const Principal& principal, const AuthAction& action);

struct CheckSpec {
  std::string type;  // TABLE_EXISTS | MIN_ROWS | SCHEMA_EQUALS | NO_NULLS | AGG_BOUND
  std::string table;
  nlohmann::json params;  // full check object, including type and table
};

struct VerifierSpec {
  std::string target_branch;
  std::vector<CheckSpec> checks;
};

struct CheckResult {
  std::string description;
  bool passed = false;
  std::string message;
};

struct VerifierReport {
  bool passed = true;
  std::vector<CheckResult> checks;

  nlohmann::json to_json() const;
};

enum class GateStatus { Merged, Denied, VerificationFailed };

const char* gate_status_name(GateStatus status);

struct GateOutcome {
  GateStatus status = GateStatus::Merged;
  std::optional<Commit> commit;          // Merged
  std::optional<VerifierReport> report;  // VerificationFailed
  std::string reason;                    // Denied
};

// Key store, verifier registry, and the verify-then-merge gate. Stores
// are plain JSON files reloaded on every use so external edits (key
// revocation, verifier updates) take effect immediately.
class Governance {
 public:
  Governance(Catalog& catalog, std::filesystem::path keys_file,
             std::filesystem::path verifiers_file,
             std::filesystem::path audit_file, Clock clock = system_utc_clock());

  struct CreatedKey {
    std::string key_id;
    std::string secret;  // shown once; only its hash is stored
  };
  CreatedKey create_key(const std::string& key_id,
                        const std::vector<Grant>& grants,
                        std::optional<std::string> secret = std::nullopt);
  void remove_key(const std::string& key_id);
  std::vector<std::string> list_key_ids() const;

  Principal authenticate(const std::string& secret) const;

  // Replaces any verifier previously registered for the same target.
  void set_verifier(const VerifierSpec& spec);
  std::vector<VerifierSpec> verifiers() const;
  std::vector<VerifierSpec> verifiers_for(const std::string& target) const;

  // Evaluates every check (no short-circuit) against the ref's commit.
  VerifierReport run_verifier(const VerifierSpec& spec,
                              const std::string& ref) const;

  // authorize -> verify source_ref with every verifier bound to target
  // -> catalog merge. DENIED and VERIFICATION_FAILED are outcomes, not
  // exceptions, and leave every branch head untouched. MergeConflict and
  // MergeContention propagate.
  GateOutcome gated_merge(const Principal& principal,
                          const std::string& source_ref,
                          const std::string& target_branch);

  // Number of run_verifier invocations (gate-ordering assertions).
  uint64_t verifier_runs() const { return verifier_runs_.load(); }

  const std::filesystem::path& audit_file() const { return audit_file_; }

 private:
  nlohmann::json load_keys() const;
  void append_audit(const nlohmann::json& entry) const;

  Catalog& catalog_;
  std::filesystem::path keys_file_;
  std::filesystem::path verifiers_file_;
  std::filesystem::path audit_file_;
  Clock clock_;
  mutable std::atomic<uint64_t> verifier_runs_{0};
};

VerifierSpec verifier_spec_from_json(const nlohmann::json& doc);
nlohmann::json verifier_spec_to_json(const VerifierSpec& spec);

}  // namespace minilake
