// Hashed API keys, grant evaluation, merge verifiers, and the
// verify-then-merge gate with its audit trail.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "minilake/catalog.hpp"
#include "minilake/codec.hpp"
#include "minilake/error.hpp"
#include "minilake/fs_util.hpp"
#include "minilake/governance.hpp"
#include "minilake/object_store.hpp"
#include "minilake/sha256.hpp"
#include "test_util.hpp"

using namespace minilake;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

// Governance over an in-memory catalog; key/verifier/audit files live
// in a throwaway directory.
struct Gov {
  TempDir dir;
  MemoryObjectStore objects;
  MemoryRefStore refs;
  Catalog catalog;
  Governance governance;

  Gov()
      : catalog(objects, refs, ticking_clock()),
        governance(catalog, dir / "keys.json", dir / "verifiers.json",
                   dir / "gate_audit.jsonl", ticking_clock(2000000000)) {
    Commit genesis = catalog.commit(std::nullopt, {}, "root", "system");
    refs.create("main", genesis.id);
  }

  Commit put_table(const std::string& branch, const std::string& name,
                   const Table& t) {
    auto head = refs.get(branch);
    REQUIRE(head.has_value());
    Commit parent = catalog.load_commit(*head);
    auto table_map = parent.table_map;
    table_map[name] = TableSnapshot{objects.put(encode_schema(t.schema)),
                                    objects.put(encode_table(t)), t.row_count};
    Commit next = catalog.commit(*head, table_map, "put " + name, "tester");
    REQUIRE(catalog.update_branch_cas(branch, *head, next.id));
    return next;
  }

  std::vector<nlohmann::json> audit_lines() {
    std::vector<nlohmann::json> lines;
    fs::path file = dir / "gate_audit.jsonl";
    if (!fs::exists(file)) return lines;
    std::ifstream in(file, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
    }
    return lines;
  }
};

// t: k non-null, v nullable with one null.
Table fixture_t() {
  return make_table(Schema{{{"k", ColumnType::Int64, false},
                            {"v", ColumnType::Int64, true}}},
                    {{I(1), I(10)}, {I(2), N()}, {I(3), I(30)}});
}

std::optional<Error> trap(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL_CHECK("no error raised");
  return std::nullopt;
}

VerifierSpec spec_of(const nlohmann::json& checks,
                     const std::string& target = "main") {
  return verifier_spec_from_json(
      {{"target_branch", target}, {"checks", checks}});
}

}  // namespace

TEST_CASE("grants parse, print, and reject malformed text") {
  Grant read = parse_grant("read");
  CHECK(read.kind == GrantKind::Read);
  CHECK(read.arg == "");
  CHECK(grant_text(read) == "read");

  Grant admin = parse_grant("admin");
  CHECK(admin.kind == GrantKind::Admin);
  CHECK(grant_text(admin) == "admin");

  Grant write = parse_grant("write:run/*");
  CHECK(write.kind == GrantKind::Write);
  CHECK(write.arg == "run/*");
  CHECK(grant_text(write) == "write:run/*");
  CHECK(parse_grant("write:main").arg == "main");  // exact names allowed
  CHECK(parse_grant("write:*").arg == "*");

  Grant merge = parse_grant("merge:main");
  CHECK(merge.kind == GrantKind::Merge);
  CHECK(merge.arg == "main");
  CHECK(grant_text(merge) == "merge:main");

  auto grants = parse_grant_list("read,write:run/*,merge:main");
  REQUIRE(grants.size() == 3);
  CHECK(grants[0] == read);
  CHECK(grants[1] == write);
  CHECK(grants[2] == merge);
  CHECK(parse_grant_list("read,,admin").size() == 2);  // empty items skipped

  auto bad = [](const std::string& text, const char* needle) {
    CAPTURE(text);
    auto err = trap([&] { parse_grant(text); });
    REQUIRE(err);
    CHECK(err->code() == Errc::InvalidArgument);
    CHECK(std::string(err->what()).find(needle) != std::string::npos);
  };
  bad("owner", "unknown grant: 'owner'");
  bad("write:", "bad write glob");
  bad("write:a*b", "bad write glob");  // star must be the suffix
  bad("merge:", "bad merge branch");
  bad("merge:no spaces", "bad merge branch");

  auto err = trap([&] { parse_grant_list(""); });
  REQUIRE(err);
  CHECK(std::string(err->what()) == "empty grant list");
  err = trap([&] { parse_grant_list(","); });
  REQUIRE(err);
  CHECK(err->code() == Errc::InvalidArgument);
}

TEST_CASE("glob_match is exact unless the pattern ends in a star") {
  CHECK(glob_match("run/*", "run/0001"));
  CHECK(glob_match("run/*", "run/"));
  CHECK_FALSE(glob_match("run/*", "run"));
  CHECK(glob_match("run*", "run/x"));
  CHECK(glob_match("*", "anything"));
  CHECK(glob_match("*", ""));
  CHECK(glob_match("main", "main"));
  CHECK_FALSE(glob_match("main", "main2"));
  CHECK_FALSE(glob_match("a*b", "axb"));  // inner star is literal
  CHECK(glob_match("a*b", "a*b"));
}

TEST_CASE("authorize: admin everywhere, write globs, exact merges") {
  Principal admin{"boss", {Grant{GrantKind::Admin, ""}}};
  Principal reader{"r", {Grant{GrantKind::Read, ""}}};
  Principal runner{"run-bot",
                   {Grant{GrantKind::Read, ""}, Grant{GrantKind::Write, "run/*"}}};
  Principal merger{"m", {Grant{GrantKind::Merge, "main"}}};

  CHECK(authorize(admin, {ActionKind::Read, ""}).allowed);
  CHECK(authorize(admin, {ActionKind::Write, "main"}).allowed);
  CHECK(authorize(admin, {ActionKind::Merge, "main"}).allowed);
  CHECK(authorize(admin, {ActionKind::Merge, "main"}).reason == "admin");

  CHECK(authorize(reader, {ActionKind::Read, ""}).allowed);
  Decision d = authorize(reader, {ActionKind::Write, "main"});
  CHECK_FALSE(d.allowed);
  CHECK(d.reason == "key 'r' has no WRITE grant covering branch 'main'");

  // A write grant does not imply read.
  Principal writer_only{"w", {Grant{GrantKind::Write, "*"}}};
  d = authorize(writer_only, {ActionKind::Read, ""});
  CHECK_FALSE(d.allowed);
  CHECK(d.reason == "key 'w' has no READ grant");

  CHECK(authorize(runner, {ActionKind::Write, "run/0001"}).allowed);
  CHECK_FALSE(authorize(runner, {ActionKind::Write, "main"}).allowed);

  // MERGE: exact grant, or a write glob that covers the target.
  CHECK(authorize(merger, {ActionKind::Merge, "main"}).allowed);
  CHECK_FALSE(authorize(merger, {ActionKind::Merge, "dev"}).allowed);
  CHECK(authorize(runner, {ActionKind::Merge, "run/0007"}).allowed);
  d = authorize(runner, {ActionKind::Merge, "main"});
  CHECK_FALSE(d.allowed);
  CHECK(d.reason == "key 'run-bot' has no MERGE grant for branch 'main'");

  // A merge grant alone does not grant write on the same branch.
  CHECK_FALSE(authorize(merger, {ActionKind::Write, "main"}).allowed);
}

TEST_CASE("keys store only hashes and authenticate by secret") {
  Gov g;
  auto grants = parse_grant_list("read,write:run/*");

  Governance::CreatedKey ana = g.governance.create_key("ana", grants, "s3cret-ana");
  CHECK(ana.key_id == "ana");
  CHECK(ana.secret == "s3cret-ana");

  Principal p = g.governance.authenticate("s3cret-ana");
  CHECK(p.key_id == "ana");
  REQUIRE(p.grants.size() == 2);
  CHECK(p.grants == grants);

  auto err = trap([&] { g.governance.authenticate("wrong"); });
  REQUIRE(err);
  CHECK(err->code() == Errc::AuthFailed);
  CHECK(std::string(err->what()) == "unknown API key");

  // The file holds the sha256 of the secret, never the secret itself.
  std::string stored = read_file(g.dir / "keys.json");
  CHECK(stored.find("s3cret-ana") == std::string::npos);
  CHECK(stored.find(sha256_hex("s3cret-ana")) != std::string::npos);

  // Generated secrets are 40 hex chars and authenticate immediately.
  Governance::CreatedKey bot =
      g.governance.create_key("bot", parse_grant_list("admin"));
  CHECK(bot.secret.size() == 40);
  CHECK(bot.secret.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(g.governance.authenticate(bot.secret).key_id == "bot");

  const std::vector<std::string> both{"ana", "bot"};
  CHECK(g.governance.list_key_ids() == both);

  err = trap([&] { g.governance.create_key("ana", grants); });
  REQUIRE(err);
  CHECK(std::string(err->what()) == "key_id already exists: ana");
  err = trap([&] { g.governance.create_key("", grants); });
  REQUIRE(err);
  CHECK(err->code() == Errc::InvalidArgument);
  err = trap([&] { g.governance.create_key("empty", {}); });
  REQUIRE(err);
  CHECK(std::string(err->what()) == "key needs at least one grant");

  g.governance.remove_key("ana");
  CHECK(g.governance.list_key_ids() == std::vector<std::string>{"bot"});
  err = trap([&] { g.governance.authenticate("s3cret-ana"); });
  REQUIRE(err);
  CHECK(err->code() == Errc::AuthFailed);
  err = trap([&] { g.governance.remove_key("ana"); });
  REQUIRE(err);
  CHECK(std::string(err->what()) == "no such key: ana");

  // Stores reload per use: a second instance over the same files sees
  // everything, and its writes are visible back.
  Governance twin(g.catalog, g.dir / "keys.json", g.dir / "verifiers.json",
                  g.dir / "gate_audit.jsonl", fixed_clock());
  CHECK(twin.authenticate(bot.secret).key_id == "bot");
  twin.create_key("cam", parse_grant_list("read"), "s3cret-cam");
  CHECK(g.governance.authenticate("s3cret-cam").key_id == "cam");
}

TEST_CASE("verifier registration validates and replaces per target") {
  Gov g;
  nlohmann::json min_rows{{"type", "MIN_ROWS"}, {"table", "t"}, {"min_rows", 2}};
  nlohmann::json exists{{"type", "TABLE_EXISTS"}, {"table", "t"}};

  g.governance.set_verifier(spec_of(nlohmann::json::array({min_rows})));
  g.governance.set_verifier(spec_of(nlohmann::json::array({exists}), "dev"));
  auto all = g.governance.verifiers();
  REQUIRE(all.size() == 2);

  // Re-registering the same target replaces its checks.
  g.governance.set_verifier(
      spec_of(nlohmann::json::array({min_rows, exists})));
  all = g.governance.verifiers();
  REQUIRE(all.size() == 2);
  auto for_main = g.governance.verifiers_for("main");
  REQUIRE(for_main.size() == 1);
  REQUIRE(for_main[0].checks.size() == 2);
  CHECK(for_main[0].checks[0].type == "MIN_ROWS");
  CHECK(for_main[0].checks[0].table == "t");
  CHECK(for_main[0].checks[1].type == "TABLE_EXISTS");
  CHECK(g.governance.verifiers_for("nope").empty());

  auto rejected = [](nlohmann::json check, const char* needle) {
    auto err = trap([&] {
      verifier_spec_from_json({{"target_branch", "main"},
                               {"checks", nlohmann::json::array({check})}});
    });
    REQUIRE(err);
    CHECK(err->code() == Errc::InvalidArgument);
    CHECK(std::string(err->what()).find(needle) != std::string::npos);
  };
  nlohmann::json unknown_type{{"type", "ROW_HASH"}, {"table", "t"}};
  rejected(unknown_type, "unknown check type: ROW_HASH");
  nlohmann::json no_bound{{"type", "MIN_ROWS"}, {"table", "t"}};
  rejected(no_bound, "MIN_ROWS needs min_rows");
  nlohmann::json no_column{{"type", "NO_NULLS"}, {"table", "t"}};
  rejected(no_column, "NO_NULLS needs column");
  nlohmann::json no_schema{{"type", "SCHEMA_EQUALS"}, {"table", "t"}};
  rejected(no_schema, "SCHEMA_EQUALS needs schema");
  nlohmann::json no_agg{{"type", "AGG_BOUND"}, {"table", "t"}, {"column", "v"}};
  rejected(no_agg, "AGG_BOUND needs agg and column");
  nlohmann::json bad_agg{{"type", "AGG_BOUND"},
                         {"table", "t"},
                         {"column", "v"},
                         {"agg", "median"}};
  rejected(bad_agg, "unknown aggregate: median");

  auto err = trap([&] {
    verifier_spec_from_json({{"target_branch", "no spaces"},
                             {"checks", nlohmann::json::array()}});
  });
  REQUIRE(err);
  CHECK(std::string(err->what()).find("bad verifier target branch") !=
        std::string::npos);
}

TEST_CASE("run_verifier evaluates every check without short-circuiting") {
  Gov g;
  g.put_table("main", "t", fixture_t());
  g.put_table("main", "u",
              make_table(Schema{{{"s", ColumnType::String, false}}},
                         {{S("a")}, {S("b")}}));
  g.put_table("main", "nil",
              make_table(Schema{{{"x", ColumnType::Int64, true}}}, {}));

  auto run_one = [&](nlohmann::json check) {
    VerifierReport report =
        g.governance.run_verifier(spec_of(nlohmann::json::array({check})), "main");
    REQUIRE(report.checks.size() == 1);
    return report.checks[0];
  };

  SUBCASE("TABLE_EXISTS") {
    nlohmann::json present{{"type", "TABLE_EXISTS"}, {"table", "t"}};
    CheckResult r = run_one(present);
    CHECK(r.description == "TABLE_EXISTS t");
    CHECK(r.passed);
    CHECK(r.message == "present");

    nlohmann::json missing{{"type", "TABLE_EXISTS"}, {"table", "ghost"}};
    r = run_one(missing);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "table ghost not found");
  }

  SUBCASE("MIN_ROWS") {
    nlohmann::json ok{{"type", "MIN_ROWS"}, {"table", "t"}, {"min_rows", 3}};
    CheckResult r = run_one(ok);
    CHECK(r.description == "MIN_ROWS t >= 3");
    CHECK(r.passed);
    CHECK(r.message == "row_count=3");

    nlohmann::json short_of{{"type", "MIN_ROWS"}, {"table", "t"}, {"min_rows", 4}};
    CHECK_FALSE(run_one(short_of).passed);

    // A missing table fails the check rather than aborting the report.
    nlohmann::json ghost{{"type", "MIN_ROWS"}, {"table", "ghost"}, {"min_rows", 1}};
    r = run_one(ghost);
    CHECK(r.description == "MIN_ROWS ghost");
    CHECK_FALSE(r.passed);
    CHECK(r.message == "table ghost not found");
  }

  SUBCASE("SCHEMA_EQUALS") {
    nlohmann::json same_schema{
        {"columns",
         {{{"name", "k"}, {"type", "INT64"}, {"nullable", false}},
          {{"name", "v"}, {"type", "INT64"}, {"nullable", true}}}}};
    nlohmann::json match{
        {"type", "SCHEMA_EQUALS"}, {"table", "t"}, {"schema", same_schema}};
    CheckResult r = run_one(match);
    CHECK(r.description == "SCHEMA_EQUALS t");
    CHECK(r.passed);
    CHECK(r.message == "schemas match");

    nlohmann::json other_schema{
        {"columns", {{{"name", "k"}, {"type", "INT64"}, {"nullable", true}}}}};
    nlohmann::json differ{
        {"type", "SCHEMA_EQUALS"}, {"table", "t"}, {"schema", other_schema}};
    r = run_one(differ);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "schemas differ");
  }

  SUBCASE("NO_NULLS") {
    nlohmann::json clean{{"type", "NO_NULLS"}, {"table", "t"}, {"column", "k"}};
    CheckResult r = run_one(clean);
    CHECK(r.description == "NO_NULLS t.k");
    CHECK(r.passed);
    CHECK(r.message == "no nulls");

    nlohmann::json dirty{{"type", "NO_NULLS"}, {"table", "t"}, {"column", "v"}};
    r = run_one(dirty);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "column v has 1 null(s)");

    nlohmann::json absent{{"type", "NO_NULLS"}, {"table", "t"}, {"column", "zz"}};
    r = run_one(absent);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "column zz not found");
  }

  SUBCASE("AGG_BOUND") {
    // Nulls are skipped by the aggregate: sum(v) = 40.
    nlohmann::json sum_ok{{"type", "AGG_BOUND"}, {"table", "t"},
                          {"agg", "sum"},       {"column", "v"},
                          {"min", 30},          {"max", 50}};
    CheckResult r = run_one(sum_ok);
    CHECK(r.description == "AGG_BOUND sum(v) on t in [30.0, 50.0]");
    CHECK(r.passed);
    CHECK(r.message == "sum(v) = 40.0");

    nlohmann::json sum_low{{"type", "AGG_BOUND"}, {"table", "t"},
                           {"agg", "sum"},       {"column", "v"},
                           {"min", 100}};
    r = run_one(sum_low);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "sum(v) = 40.0");

    // Omitted bounds default to infinity, printed as null.
    nlohmann::json count_v{{"type", "AGG_BOUND"}, {"table", "t"},
                           {"agg", "count"},     {"column", "v"},
                           {"max", 2}};
    r = run_one(count_v);
    CHECK(r.description == "AGG_BOUND count(v) on t in [null, 2.0]");
    CHECK(r.passed);  // two non-null values
    CHECK(r.message == "count(v) = 2.0");

    nlohmann::json avg_v{{"type", "AGG_BOUND"}, {"table", "t"},
                         {"agg", "avg"},       {"column", "v"},
                         {"min", 19},          {"max", 21}};
    CHECK(run_one(avg_v).passed);  // avg = 20
    nlohmann::json min_v{{"type", "AGG_BOUND"}, {"table", "t"},
                         {"agg", "min"},       {"column", "v"},
                         {"min", 10},          {"max", 10}};
    CHECK(run_one(min_v).passed);
    nlohmann::json max_v{{"type", "AGG_BOUND"}, {"table", "t"},
                         {"agg", "max"},       {"column", "v"},
                         {"min", 31}};
    CHECK_FALSE(run_one(max_v).passed);  // max = 30

    // Aggregate over an empty table is null: fails the bound.
    nlohmann::json empty_sum{{"type", "AGG_BOUND"}, {"table", "nil"},
                             {"agg", "sum"},       {"column", "x"},
                             {"min", 0}};
    r = run_one(empty_sum);
    CHECK_FALSE(r.passed);
    CHECK(r.message == "aggregate is null");

    // Type errors inside the aggregate are reported, not thrown.
    nlohmann::json bad_sum{{"type", "AGG_BOUND"}, {"table", "u"},
                           {"agg", "sum"},       {"column", "s"},
                           {"min", 0}};
    r = run_one(bad_sum);
    CHECK_FALSE(r.passed);
    CHECK(r.message.rfind("TypeMismatch: ", 0) == 0);
  }

  SUBCASE("reports aggregate every check in order") {
    nlohmann::json checks = nlohmann::json::array(
        {nlohmann::json{{"type", "TABLE_EXISTS"}, {"table", "t"}},
         nlohmann::json{{"type", "MIN_ROWS"}, {"table", "t"}, {"min_rows", 99}},
         nlohmann::json{{"type", "NO_NULLS"}, {"table", "t"}, {"column", "k"}}});
    uint64_t before = g.governance.verifier_runs();
    VerifierReport report = g.governance.run_verifier(spec_of(checks), "main");
    CHECK(g.governance.verifier_runs() == before + 1);
    CHECK_FALSE(report.passed);
    REQUIRE(report.checks.size() == 3);  // no short-circuit after a failure
    CHECK(report.checks[0].passed);
    CHECK_FALSE(report.checks[1].passed);
    CHECK(report.checks[2].passed);

    nlohmann::json j = report.to_json();
    CHECK(j.at("passed") == false);
    CHECK(j.at("checks").size() == 3);
    CHECK(j.at("checks").at(1).at("description") == "MIN_ROWS t >= 99");
  }
}

TEST_CASE("gated_merge runs authorize, verify, merge in that order") {
  Gov g;
  g.put_table("main", "t", fixture_t());
  ObjectId base = *g.refs.get("main");
  g.catalog.create_branch("dev", base.hex());
  g.put_table("dev", "fresh",
              make_table(Schema{{{"x", ColumnType::Int64, false}}},
                         {{I(1)}, {I(2)}}));
  Principal admin{"boss", {Grant{GrantKind::Admin, ""}}};

  SUBCASE("denied before any verifier runs") {
    nlohmann::json check{{"type", "MIN_ROWS"}, {"table", "fresh"}, {"min_rows", 1}};
    g.governance.set_verifier(spec_of(nlohmann::json::array({check})));
    Principal reader{"intern", {Grant{GrantKind::Read, ""}}};

    GateOutcome out = g.governance.gated_merge(reader, "dev", "main");

    CHECK(out.status == GateStatus::Denied);
    CHECK(out.reason == "key 'intern' has no MERGE grant for branch 'main'");
    CHECK_FALSE(out.commit.has_value());
    CHECK(g.governance.verifier_runs() == 0);  // authorization came first
    CHECK(*g.refs.get("main") == base);

    auto audit = g.audit_lines();
    REQUIRE(audit.size() == 1);
    CHECK(audit[0].at("outcome") == "DENIED");
    CHECK(audit[0].at("key_id") == "intern");
    CHECK(audit[0].at("source") == "dev");
    CHECK(audit[0].at("target") == "main");
    CHECK(audit[0].at("reason") == out.reason);
    CHECK(audit[0].at("ts").is_number());
  }

  SUBCASE("verification failure reports and stops before the merge") {
    // The verifier examines the SOURCE ref: fresh lives only on dev.
    nlohmann::json big{{"type", "MIN_ROWS"}, {"table", "fresh"},
                       {"min_rows", 1000000000}};
    g.governance.set_verifier(spec_of(nlohmann::json::array({big})));

    GateOutcome out = g.governance.gated_merge(admin, "dev", "main");

    CHECK(out.status == GateStatus::VerificationFailed);
    REQUIRE(out.report.has_value());
    CHECK_FALSE(out.report->passed);
    REQUIRE(out.report->checks.size() == 1);
    CHECK(out.report->checks[0].message == "row_count=2");
    CHECK(g.governance.verifier_runs() == 1);
    CHECK(*g.refs.get("main") == base);

    auto audit = g.audit_lines();
    REQUIRE(audit.size() == 1);
    CHECK(audit[0].at("outcome") == "VERIFICATION_FAILED");
    CHECK(audit[0].at("report").at("passed") == false);
  }

  SUBCASE("a satisfied gate merges and records the commit") {
    nlohmann::json check{{"type", "MIN_ROWS"}, {"table", "fresh"}, {"min_rows", 2}};
    g.governance.set_verifier(spec_of(nlohmann::json::array({check})));

    GateOutcome out = g.governance.gated_merge(admin, "dev", "main");

    CHECK(out.status == GateStatus::Merged);
    REQUIRE(out.commit.has_value());
    CHECK(*g.refs.get("main") == out.commit->id);
    CHECK(out.commit->table_map.count("fresh") == 1);
    REQUIRE(out.report.has_value());
    CHECK(out.report->passed);

    auto audit = g.audit_lines();
    REQUIRE(audit.size() == 1);
    CHECK(audit[0].at("outcome") == "MERGED");
    CHECK(audit[0].at("verified") == true);
    CHECK(audit[0].at("commit") == out.commit->id.hex());
  }

  SUBCASE("no verifier bound to the target merges, marked unverified") {
    // A verifier bound to a *different* target must not be consulted.
    nlohmann::json check{{"type", "TABLE_EXISTS"}, {"table", "ghost"}};
    g.governance.set_verifier(spec_of(nlohmann::json::array({check}), "dev"));

    GateOutcome out = g.governance.gated_merge(admin, "dev", "main");

    CHECK(out.status == GateStatus::Merged);
    CHECK(g.governance.verifier_runs() == 0);
    auto audit = g.audit_lines();
    REQUIRE(audit.size() == 1);
    CHECK(audit[0].at("verified") == false);
  }

  SUBCASE("merge conflicts propagate as exceptions without an audit line") {
    Table rival = make_table(Schema{{{"k", ColumnType::Int64, false},
                                     {"v", ColumnType::Int64, true}}},
                             {{I(9), I(9)}});
    g.put_table("dev", "t", rival);   // both sides now changed t
    g.put_table("main", "t", make_table(fixture_t().schema, {{I(4), I(40)}}));

    auto err = trap([&] { g.governance.gated_merge(admin, "dev", "main"); });
    REQUIRE(err);
    CHECK(err->code() == Errc::MergeConflict);
    CHECK(g.audit_lines().empty());  // outcomes audit; exceptions record upstream
  }

  SUBCASE("successive gate outcomes append to one audit trail") {
    Principal reader{"intern", {Grant{GrantKind::Read, ""}}};
    g.governance.gated_merge(reader, "dev", "main");
    g.governance.gated_merge(admin, "dev", "main");
    auto audit = g.audit_lines();
    REQUIRE(audit.size() == 2);
    CHECK(audit[0].at("outcome") == "DENIED");
    CHECK(audit[1].at("outcome") == "MERGED");
    CHECK(audit[0].at("ts").get<int64_t>() < audit[1].at("ts").get<int64_t>());
  }
}
