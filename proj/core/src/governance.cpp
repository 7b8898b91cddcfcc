#include "minilake/governance.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "minilake/codec.hpp"
#include "minilake/eval.hpp"
#include "minilake/fs_util.hpp"
#include "minilake/plan_ast.hpp"
#include "minilake/sha256.hpp"

namespace minilake {

namespace {

std::string random_secret() {
  static const char hex[] = "0123456789abcdef";
  std::random_device rd;
  std::string out;
  out.reserve(40);
  for (int i = 0; i < 40; ++i) out.push_back(hex[rd() % 16]);
  return out;
}

bool valid_glob(const std::string& glob) {
  if (glob.empty()) return false;
  size_t star = glob.find('*');
  if (star == std::string::npos) return true;     // exact name
  return star == glob.size() - 1;                 // prefix-"*" only
}

std::optional<double> numeric_cell(const CellValue& cell) {
  if (const auto* i = std::get_if<int64_t>(&cell)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  return std::nullopt;
}

std::string format_bound(double v) {
  nlohmann::json j = v;
  return j.dump();
}

}  // namespace

Grant parse_grant(const std::string& text) {
  if (text == "read") return {GrantKind::Read, ""};
  if (text == "admin") return {GrantKind::Admin, ""};
  if (text.rfind("write:", 0) == 0) {
    std::string glob = text.substr(6);
    if (!valid_glob(glob)) {
      raise(Errc::InvalidArgument, "bad write glob: '" + glob + "'");
    }
    return {GrantKind::Write, glob};
  }
  if (text.rfind("merge:", 0) == 0) {
    std::string branch = text.substr(6);
    if (!valid_branch_name(branch)) {
      raise(Errc::InvalidArgument, "bad merge branch: '" + branch + "'");
    }
    return {GrantKind::Merge, branch};
  }
  raise(Errc::InvalidArgument, "unknown grant: '" + text + "'");
}

std::string grant_text(const Grant& grant) {
  switch (grant.kind) {
    case GrantKind::Read: return "read";
    case GrantKind::Admin: return "admin";
    case GrantKind::Write: return "write:" + grant.arg;
    case GrantKind::Merge: return "merge:" + grant.arg;
  }
  return "";
}

std::vector<Grant> parse_grant_list(const std::string& text) {
  std::vector<Grant> grants;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string item = text.substr(
        pos, (comma == std::string::npos ? text.size() : comma) - pos);
    if (!item.empty()) grants.push_back(parse_grant(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (grants.empty()) {
    raise(Errc::InvalidArgument, "empty grant list");
  }
  return grants;
}

bool glob_match(const std::string& pattern, const std::string& value) {
  if (!pattern.empty() && pattern.back() == '*') {
    return value.compare(0, pattern.size() - 1, pattern, 0,
                         pattern.size() - 1) == 0;
  }
  return pattern == value;
}

Decision authorize(const Principal& principal, const AuthAction& action) {
  for (const auto& g : principal.grants) {
    if (g.kind == GrantKind::Admin) return {true, "admin"};
  }
  switch (action.kind) {
    case ActionKind::Read:
      for (const auto& g : principal.grants) {
        if (g.kind == GrantKind::Read) return {true, ""};
      }
      return {false, "key '" + principal.key_id + "' has no READ grant"};
    case ActionKind::Write:
      for (const auto& g : principal.grants) {
        if (g.kind == GrantKind::Write && glob_match(g.arg, action.branch)) {
          return {true, ""};
        }
      }
      return {false, "key '" + principal.key_id +
                         "' has no WRITE grant covering branch '" +
                         action.branch + "'"};
    case ActionKind::Merge:
      for (const auto& g : principal.grants) {
        if (g.kind == GrantKind::Merge && g.arg == action.branch) {
          return {true, ""};
        }
        if (g.kind == GrantKind::Write && glob_match(g.arg, action.branch)) {
          return {true, ""};
        }
      }
      return {false, "key '" + principal.key_id +
                         "' has no MERGE grant for branch '" + action.branch +
                         "'"};
  }
  return {false, "unknown action"};
}

nlohmann::json VerifierReport::to_json() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"description", c.description},
                           {"passed", c.passed},
                           {"message", c.message}});
  }
  return {{"passed", passed}, {"checks", std::move(checks_json)}};
}

const char* gate_status_name(GateStatus status) {
  switch (status) {
    case GateStatus::Merged: return "MERGED";
    case GateStatus::Denied: return "DENIED";
    case GateStatus::VerificationFailed: return "VERIFICATION_FAILED";
  }
  return "?";
}

VerifierSpec verifier_spec_from_json(const nlohmann::json& doc) {
  VerifierSpec spec;
  spec.target_branch = doc.at("target_branch").get<std::string>();
  if (!valid_branch_name(spec.target_branch)) {
    raise(Errc::InvalidArgument,
          "bad verifier target branch: " + spec.target_branch);
  }
  static const std::set<std::string> known = {
      "TABLE_EXISTS", "MIN_ROWS", "SCHEMA_EQUALS", "NO_NULLS", "AGG_BOUND"};
  for (const auto& c : doc.at("checks")) {
    CheckSpec check;
    check.type = c.at("type").get<std::string>();
    check.table = c.at("table").get<std::string>();
    check.params = c;
    if (!known.count(check.type)) {
      raise(Errc::InvalidArgument, "unknown check type: " + check.type);
    }
    if (check.type == "MIN_ROWS" && !c.contains("min_rows")) {
      raise(Errc::InvalidArgument, "MIN_ROWS needs min_rows");
    }
    if (check.type == "NO_NULLS" && !c.contains("column")) {
      raise(Errc::InvalidArgument, "NO_NULLS needs column");
    }
    if (check.type == "SCHEMA_EQUALS") {
      if (!c.contains("schema")) {
        raise(Errc::InvalidArgument, "SCHEMA_EQUALS needs schema");
      }
      decode_schema(c.at("schema").dump());  // must typecheck at registration
    }
    if (check.type == "AGG_BOUND") {
      if (!c.contains("agg") || !c.contains("column")) {
        raise(Errc::InvalidArgument, "AGG_BOUND needs agg and column");
      }
      std::string agg = c.at("agg").get<std::string>();
      if (agg != "count" && agg != "sum" && agg != "min" && agg != "max" &&
          agg != "avg") {
        raise(Errc::InvalidArgument, "unknown aggregate: " + agg);
      }
    }
    spec.checks.push_back(std::move(check));
  }
  return spec;
}

nlohmann::json verifier_spec_to_json(const VerifierSpec& spec) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : spec.checks) checks.push_back(c.params);
  return {{"target_branch", spec.target_branch}, {"checks", std::move(checks)}};
}

Governance::Governance(Catalog& catalog, std::filesystem::path keys_file,
                       std::filesystem::path verifiers_file,
                       std::filesystem::path audit_file, Clock clock)
    : catalog_(catalog),
      keys_file_(std::move(keys_file)),
      verifiers_file_(std::move(verifiers_file)),
      audit_file_(std::move(audit_file)),
      clock_(std::move(clock)) {}

nlohmann::json Governance::load_keys() const {
  if (!std::filesystem::exists(keys_file_)) {
    return nlohmann::json{{"keys", nlohmann::json::array()}};
  }
  return read_json_file(keys_file_);
}

Governance::CreatedKey Governance::create_key(
    const std::string& key_id, const std::vector<Grant>& grants,
    std::optional<std::string> secret) {
  if (key_id.empty()) {
    raise(Errc::InvalidArgument, "key_id must be non-empty");
  }
  if (grants.empty()) {
    raise(Errc::InvalidArgument, "key needs at least one grant");
  }
  nlohmann::json doc = load_keys();
  for (const auto& k : doc.at("keys")) {
    if (k.at("key_id") == key_id) {
      raise(Errc::InvalidArgument, "key_id already exists: " + key_id);
    }
  }
  std::string chosen = secret.value_or(random_secret());
  nlohmann::json grants_json = nlohmann::json::array();
  for (const auto& g : grants) grants_json.push_back(grant_text(g));
  doc["keys"].push_back({{"key_id", key_id},
                         {"secret_hash", sha256_hex(chosen)},
                         {"grants", std::move(grants_json)}});
  write_json_file_atomic(keys_file_, doc);
  return {key_id, chosen};
}

void Governance::remove_key(const std::string& key_id) {
  nlohmann::json doc = load_keys();
  auto& keys = doc.at("keys");
  for (auto it = keys.begin(); it != keys.end(); ++it) {
    if (it->at("key_id") == key_id) {
      keys.erase(it);
      write_json_file_atomic(keys_file_, doc);
      return;
    }
  }
  raise(Errc::InvalidArgument, "no such key: " + key_id);
}

std::vector<std::string> Governance::list_key_ids() const {
  std::vector<std::string> ids;
  nlohmann::json doc = load_keys();
  for (const auto& k : doc.at("keys")) {
    ids.push_back(k.at("key_id").get<std::string>());
  }
  return ids;
}

Principal Governance::authenticate(const std::string& secret) const {
  std::string hash = sha256_hex(secret);
  nlohmann::json doc = load_keys();
  for (const auto& k : doc.at("keys")) {
    if (secure_equal(k.at("secret_hash").get<std::string>(), hash)) {
      Principal p;
      p.key_id = k.at("key_id").get<std::string>();
      for (const auto& g : k.at("grants")) {
        p.grants.push_back(parse_grant(g.get<std::string>()));
      }
      return p;
    }
  }
  raise(Errc::AuthFailed, "unknown API key");
}

void Governance::set_verifier(const VerifierSpec& spec) {
  nlohmann::json doc;
  if (std::filesystem::exists(verifiers_file_)) {
    doc = read_json_file(verifiers_file_);
  } else {
    doc = {{"verifiers", nlohmann::json::array()}};
  }
  auto& list = doc.at("verifiers");
  for (auto it = list.begin(); it != list.end(); ++it) {
    if (it->at("target_branch") == spec.target_branch) {
      list.erase(it);
      break;
    }
  }
  list.push_back(verifier_spec_to_json(spec));
  write_json_file_atomic(verifiers_file_, doc);
}

std::vector<VerifierSpec> Governance::verifiers() const {
  std::vector<VerifierSpec> out;
  if (!std::filesystem::exists(verifiers_file_)) return out;
  nlohmann::json doc = read_json_file(verifiers_file_);
  for (const auto& v : doc.at("verifiers")) {
    out.push_back(verifier_spec_from_json(v));
  }
  return out;
}

std::vector<VerifierSpec> Governance::verifiers_for(
    const std::string& target) const {
  std::vector<VerifierSpec> out;
  for (auto& v : verifiers()) {
    if (v.target_branch == target) out.push_back(std::move(v));
  }
  return out;
}

VerifierReport Governance::run_verifier(const VerifierSpec& spec,
                                        const std::string& ref) const {
  verifier_runs_.fetch_add(1);
  Commit commit = catalog_.load_commit(catalog_.resolve_ref(ref));

  auto load_table = [&](const TableSnapshot& snap) {
    auto bytes = catalog_.get_object(snap.data_id);
    if (!bytes) {
      raise(Errc::DanglingSnapshot, "table data object missing");
    }
    return decode_table(*bytes);
  };

  VerifierReport report;
  for (const auto& check : spec.checks) {
    CheckResult result;
    auto snap = commit.table_map.find(check.table);

    if (check.type == "TABLE_EXISTS") {
      result.description = "TABLE_EXISTS " + check.table;
      result.passed = snap != commit.table_map.end();
      result.message = result.passed ? "present" : "table " + check.table + " not found";
    } else if (snap == commit.table_map.end()) {
      // Missing table fails the check, it does not abort the report.
      result.description = check.type + " " + check.table;
      result.passed = false;
      result.message = "table " + check.table + " not found";
    } else if (check.type == "MIN_ROWS") {
      uint64_t min_rows = check.params.at("min_rows").get<uint64_t>();
      result.description =
          "MIN_ROWS " + check.table + " >= " + std::to_string(min_rows);
      result.passed = snap->second.row_count >= min_rows;
      result.message = "row_count=" + std::to_string(snap->second.row_count);
    } else if (check.type == "SCHEMA_EQUALS") {
      result.description = "SCHEMA_EQUALS " + check.table;
      Schema expected = decode_schema(check.params.at("schema").dump());
      auto stored = catalog_.get_object(snap->second.schema_id);
      if (!stored) {
        result.passed = false;
        result.message = "schema object missing";
      } else {
        result.passed = encode_schema(expected) == *stored;
        result.message = result.passed ? "schemas match" : "schemas differ";
      }
    } else if (check.type == "NO_NULLS") {
      std::string column = check.params.at("column").get<std::string>();
      result.description = "NO_NULLS " + check.table + "." + column;
      Table table = load_table(snap->second);
      auto idx = table.schema.index_of(column);
      if (!idx) {
        result.passed = false;
        result.message = "column " + column + " not found";
      } else {
        uint64_t nulls = 0;
        for (const auto& cell : table.columns[*idx]) {
          if (is_null(cell)) ++nulls;
        }
        result.passed = nulls == 0;
        result.message = result.passed
                             ? "no nulls"
                             : "column " + column + " has " +
                                   std::to_string(nulls) + " null(s)";
      }
    } else if (check.type == "AGG_BOUND") {
      std::string agg = check.params.at("agg").get<std::string>();
      std::string column = check.params.at("column").get<std::string>();
      double lo = check.params.value("min", -std::numeric_limits<double>::infinity());
      double hi = check.params.value("max", std::numeric_limits<double>::infinity());
      result.description = "AGG_BOUND " + agg + "(" + column + ") on " +
                           check.table + " in [" + format_bound(lo) + ", " +
                           format_bound(hi) + "]";
      AggFn fn = AggFn::Count;
      if (agg == "sum") fn = AggFn::Sum;
      else if (agg == "min") fn = AggFn::Min;
      else if (agg == "max") fn = AggFn::Max;
      else if (agg == "avg") fn = AggFn::Avg;
      Plan plan;
      plan.source = check.table;
      plan.stages.push_back(AggregateStage{{}, {AggItem{"v", fn, column}}});
      try {
        Table out = eval_plan(plan, {{check.table, load_table(snap->second)}});
        const CellValue& cell = out.columns.at(0).at(0);
        auto value = numeric_cell(cell);
        if (!value) {
          result.passed = false;
          result.message = "aggregate is null";
        } else {
          result.passed = lo <= *value && *value <= hi;
          result.message = agg + "(" + column + ") = " + format_bound(*value);
        }
      } catch (const Error& e) {
        result.passed = false;
        result.message = std::string(e.kind()) + ": " + e.what();
      }
    } else {
      result.description = check.type + " " + check.table;
      result.passed = false;
      result.message = "unknown check type";
    }

    report.passed = report.passed && result.passed;
    report.checks.push_back(std::move(result));
  }
  return report;
}

void Governance::append_audit(const nlohmann::json& entry) const {
  std::ofstream out(audit_file_, std::ios::app | std::ios::binary);
  out << entry.dump() << "\n";
}

GateOutcome Governance::gated_merge(const Principal& principal,
                                    const std::string& source_ref,
                                    const std::string& target_branch) {
  GateOutcome outcome;

  Decision decision =
      authorize(principal, {ActionKind::Merge, target_branch});
  if (!decision.allowed) {
    outcome.status = GateStatus::Denied;
    outcome.reason = decision.reason;
    append_audit({{"ts", clock_()},
                  {"key_id", principal.key_id},
                  {"source", source_ref},
                  {"target", target_branch},
                  {"outcome", gate_status_name(outcome.status)},
                  {"reason", decision.reason}});
    return outcome;
  }

  VerifierReport combined;
  for (const auto& spec : verifiers_for(target_branch)) {
    VerifierReport r = run_verifier(spec, source_ref);
    combined.passed = combined.passed && r.passed;
    for (auto& c : r.checks) combined.checks.push_back(std::move(c));
  }
  if (!combined.passed) {
    outcome.status = GateStatus::VerificationFailed;
    outcome.report = combined;
    append_audit({{"ts", clock_()},
                  {"key_id", principal.key_id},
                  {"source", source_ref},
                  {"target", target_branch},
                  {"outcome", gate_status_name(outcome.status)},
                  {"report", combined.to_json()}});
    return outcome;
  }

  Commit merged = catalog_.merge(source_ref, target_branch, principal.key_id);
  outcome.status = GateStatus::Merged;
  outcome.commit = merged;
  outcome.report = combined;  // may be empty when no verifiers are bound
  append_audit({{"ts", clock_()},
                {"key_id", principal.key_id},
                {"source", source_ref},
                {"target", target_branch},
                {"outcome", gate_status_name(outcome.status)},
                {"verified", !combined.checks.empty()},
                {"commit", merged.id.hex()}});
  return outcome;
}

}  // namespace minilake
