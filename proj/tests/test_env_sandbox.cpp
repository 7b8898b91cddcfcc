// Simulated package registry, environment resolution, and the step
// sandbox in both isolation modes. The subprocess cases drive the real
// CLI binary (MINILAKE_CLI_PATH) as the worker.

#include <unistd.h>

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "minilake/codec.hpp"
#include "minilake/error.hpp"
#include "minilake/pipeline.hpp"
#include "minilake/plan_parser.hpp"
#include "minilake/registry.hpp"
#include "minilake/sandbox.hpp"
#include "minilake/step_worker.hpp"
#include "test_util.hpp"

using namespace minilake;
using namespace testutil;

namespace {

// Writing to a worker that died early must not kill the test binary.
[[maybe_unused]] const auto sigpipe_ignored = std::signal(SIGPIPE, SIG_IGN);

PackageRegistry demo_registry() {
  return PackageRegistry::from_json(nlohmann::json::parse(R"({
    "packages": {
      "numpy":   {"versions": ["1.26.4", "2.0.0", "2.1.1"], "latest": "2.1.1"},
      "pandas":  {"versions": ["1.5.3", "2.2.2"], "latest": "2.2.2"},
      "pyarrow": {"versions": ["15.0.2", "16.1.0"], "latest": "16.1.0"},
      "scipy":   {"versions": ["1.11.4"], "latest": "1.11.4"}
    },
    "dependencies": {
      "pandas@2.2.2":   [{"pkg": "numpy", "range": ">=1.26,<3"},
                         {"pkg": "pyarrow", "range": ">=15"}],
      "pandas@1.5.3":   [{"pkg": "numpy", "range": ">=1.20,<2"}],
      "pyarrow@16.1.0": [{"pkg": "numpy", "range": ">=1.25"}]
    },
    "conflicts": [
      {"a": "numpy@>=2", "b": "scipy@<1.12",
       "message": "numpy 2 removed APIs scipy 1.11 needs"}
    ]
  })"));
}

EnvSpec pins(std::map<std::string, std::string> m) {
  EnvSpec env;
  env.runtime_version = "3.11";
  env.pins = std::move(m);
  return env;
}

// Captures the Error a callable raises; fails the test if none comes.
std::optional<Error> trap(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL_CHECK("no error raised");
  return std::nullopt;
}

ModelNode make_node(const std::string& name, const std::string& plan_text,
                    std::vector<std::string> inputs) {
  ModelNode node;
  node.name = name;
  node.inputs = std::move(inputs);
  node.plan_file = "plans/" + name + ".plan";
  node.plan = parse_plan(plan_text);
  return node;
}

Table src_table() {
  return make_table(Schema{{{"v", ColumnType::Int64, true}}},
                    {{I(1)}, {I(2)}, {I(3)}});
}

}  // namespace

TEST_CASE("version comparison pads missing components with zeros") {
  CHECK(compare_versions("2.0", "2.0.0") == 0);
  CHECK(compare_versions("2.0", "2.0.1") < 0);
  CHECK(compare_versions("2.0.1", "2.0") > 0);
  CHECK(compare_versions("1.10", "1.9") > 0);  // numeric, not lexicographic
  CHECK(compare_versions("3", "2.99.99") > 0);
  CHECK(compare_versions("007", "7") == 0);

  Version v = Version::parse("1.26.4");
  CHECK(v.text == "1.26.4");
  auto parts = std::vector<int64_t>{1, 26, 4};
  CHECK(v.parts == parts);

  for (const char* bad : {"", "1.x", "1..2", "1.", "-1", "1.2.3a", "+1"}) {
    CAPTURE(bad);
    auto err = trap([&] { Version::parse(bad); });
    REQUIRE(err);
    CHECK(err->code() == Errc::ParseError);
  }
}

TEST_CASE("version ranges are conjunctions of ==, >= and <") {
  auto in = [](const std::string& range, const std::string& v) {
    return VersionRange::parse(range).contains(v);
  };

  // Empty and "*" match everything.
  CHECK(in("*", "0.0.1"));
  CHECK(in("", "99"));

  // A bare version is an implicit exact match (with zero padding).
  CHECK(in("2.0", "2.0.0"));
  CHECK_FALSE(in("2.0", "2.0.1"));
  CHECK(in("==1.5.3", "1.5.3"));
  CHECK_FALSE(in("==1.5.3", "1.5.4"));

  CHECK(in(">=1.4", "1.4"));
  CHECK(in(">=1.4", "2"));
  CHECK_FALSE(in(">=1.4", "1.3.9"));
  CHECK(in("<2", "1.99"));
  CHECK_FALSE(in("<2", "2"));
  CHECK_FALSE(in("<2", "2.0.0"));

  // Comma means "and"; whitespace around tokens is ignored.
  CHECK(in(">=1.4,<2", "1.4"));
  CHECK(in(">=1.4,<2", "1.9.9"));
  CHECK_FALSE(in(">=1.4,<2", "1.3"));
  CHECK_FALSE(in(">=1.4,<2", "2.0"));
  CHECK(in(" >= 1.4 , < 2 ", "1.7"));

  // text() keeps the source spelling verbatim.
  CHECK(VersionRange::parse(" >= 1.4 , < 2 ").text() == " >= 1.4 , < 2 ");

  auto bad = [&](const std::string& range) {
    auto err = trap([&] { VersionRange::parse(range); });
    REQUIRE(err);
    CHECK(err->code() == Errc::ParseError);
  };
  bad(">=1.4,,<2");  // empty constraint
  bad(",>=1");
  bad(">1.0");   // only >= and < exist; this reads as a bare version
  bad("~=1.0");

  auto err = trap([&] { VersionRange::parse("*").contains("abc"); });
  REQUIRE(err);
  CHECK(err->code() == Errc::ParseError);
}

TEST_CASE("registry loads from json and round-trips through to_json") {
  PackageRegistry reg = demo_registry();

  REQUIRE(reg.find("numpy") != nullptr);
  CHECK(reg.find("numpy")->latest == "2.1.1");
  CHECK(reg.find("left_pad") == nullptr);
  CHECK(reg.has_version("numpy", "2.0.0"));
  CHECK_FALSE(reg.has_version("numpy", "9.9"));
  CHECK_FALSE(reg.has_version("left_pad", "1.0"));

  auto deps = reg.dependencies_of("pandas", "2.2.2");
  REQUIRE(deps.size() == 2);
  CHECK(deps[0].package == "numpy");
  CHECK(deps[0].range.text() == ">=1.26,<3");
  CHECK(deps[1].package == "pyarrow");
  CHECK(reg.dependencies_of("numpy", "2.1.1").empty());
  CHECK(reg.dependencies_of("nope", "1").empty());

  // to_json -> from_json -> to_json is a fixed point.
  nlohmann::json j = reg.to_json();
  CHECK(j.at("packages").at("numpy").at("latest") == "2.1.1");
  CHECK(j.at("conflicts").at(0).at("a") == "numpy@>=2");
  CHECK(PackageRegistry::from_json(j).to_json() == j);

  TempDir dir;
  write_file(dir.path() / "registry.json", j.dump());
  PackageRegistry loaded = PackageRegistry::load(dir.path() / "registry.json");
  CHECK(loaded.to_json() == j);
  CHECK_THROWS_AS(PackageRegistry::load(dir.path() / "nope.json"), Error);
}

TEST_CASE("malformed registry documents are rejected") {
  auto bad = [](const char* text, const char* needle) {
    CAPTURE(text);
    auto err = trap([&] { PackageRegistry::from_json(nlohmann::json::parse(text)); });
    REQUIRE(err);
    CHECK(err->code() == Errc::ParseError);
    CHECK(std::string(err->what()).find(needle) != std::string::npos);
  };

  bad(R"({"packages": {"a": {"versions": ["1.0"], "latest": "2.0"}}})",
      "latest 2.0 not in versions of a");
  bad(R"({"packages": {"a": {"versions": ["1.o"], "latest": "1.o"}}})",
      "not numeric");
  bad(R"({"packages": {"a": {"versions": ["1.0"], "latest": "1.0"}},
          "dependencies": {"a": []}})",
      "dependency key must be pkg@ver: a");
  bad(R"({"packages": {"a": {"versions": ["1.0"], "latest": "1.0"}},
          "dependencies": {"a@2.0": []}})",
      "dependency key names unknown version: a@2.0");
  bad(R"({"conflicts": [{"a": "no-at-sign", "b": "x@1", "message": "m"}]})",
      "conflict side must be pkg@version-or-range");
  bad(R"([1, 2, 3])", "top level must be an object");
}

TEST_CASE("latest_satisfying prefers the published latest, then the greatest") {
  PackageRegistry reg = demo_registry();

  CHECK(reg.latest_satisfying("numpy", VersionRange::parse("*")) == "2.1.1");
  // latest 2.1.1 is outside <2, so fall back to the greatest listed match.
  CHECK(reg.latest_satisfying("numpy", VersionRange::parse("<2")) == "1.26.4");
  CHECK(reg.latest_satisfying("numpy", VersionRange::parse(">=1.26,<2.1")) ==
        "2.0.0");
  CHECK(reg.latest_satisfying("numpy", VersionRange::parse(">=3")) ==
        std::nullopt);
  CHECK(reg.latest_satisfying("left_pad", VersionRange::parse("*")) ==
        std::nullopt);

  // The registry's "latest" wins even when a numerically greater version
  // is listed: "latest" is the publisher's word, not max().
  auto weird = PackageRegistry::from_json(nlohmann::json::parse(R"({
    "packages": {"w": {"versions": ["2.0", "1.0"], "latest": "1.0"}}
  })"));
  CHECK(weird.latest_satisfying("w", VersionRange::parse("*")) == "1.0");
  CHECK(weird.latest_satisfying("w", VersionRange::parse(">=2")) == "2.0");

  CHECK(reg.greatest_outside("numpy", VersionRange::parse("<2")) == "2.1.1");
  CHECK(reg.greatest_outside("numpy", VersionRange::parse(">=2")) == "1.26.4");
  CHECK(reg.greatest_outside("numpy", VersionRange::parse("*")) == std::nullopt);
  CHECK(reg.greatest_outside("left_pad", VersionRange::parse("<1")) ==
        std::nullopt);
}

TEST_CASE("resolve_env installs pins exactly and transitives at latest") {
  PackageRegistry reg = demo_registry();

  SUBCASE("no pins resolves to an empty install set") {
    ResolvedEnv env = resolve_env(pins({}), reg);
    CHECK(env.runtime_version == "3.11");
    CHECK(env.installed.empty());
  }

  SUBCASE("transitive closure picks latest-satisfying versions") {
    ResolvedEnv env = resolve_env(pins({{"pandas", "2.2.2"}}), reg);
    REQUIRE(env.installed.size() == 3);
    CHECK(env.installed.at("pandas") == "2.2.2");
    CHECK(env.installed.at("numpy") == "2.1.1");
    CHECK(env.installed.at("pyarrow") == "16.1.0");
    CHECK(env.provenance.at("pandas") == Provenance::Pinned);
    CHECK(env.provenance.at("numpy") == Provenance::Transitive);
    CHECK(env.provenance.at("pyarrow") == Provenance::Transitive);
  }

  SUBCASE("a range that excludes latest falls back to the greatest match") {
    ResolvedEnv env = resolve_env(pins({{"pandas", "1.5.3"}}), reg);
    REQUIRE(env.installed.size() == 2);
    CHECK(env.installed.at("numpy") == "1.26.4");  // >=1.20,<2 bars 2.x
  }

  SUBCASE("a pin overrides what the dependency walk would have chosen") {
    ResolvedEnv env =
        resolve_env(pins({{"numpy", "1.26.4"}, {"pandas", "2.2.2"}}), reg);
    CHECK(env.installed.at("numpy") == "1.26.4");  // not latest 2.1.1
    CHECK(env.provenance.at("numpy") == Provenance::Pinned);
    CHECK(env.installed.at("pyarrow") == "16.1.0");
  }

  SUBCASE("a pin outside a declared range is unsatisfiable") {
    auto err = trap([&] {
      resolve_env(pins({{"numpy", "2.0.0"}, {"pandas", "1.5.3"}}), reg);
    });
    REQUIRE(err);
    CHECK(err->code() == Errc::Unsatisfiable);
    CHECK(std::string(err->what()) ==
          "pandas requires numpy >=1.20,<2 but 2.0.0 is installed");
  }

  SUBCASE("unknown pins fail before any resolution") {
    auto err = trap([&] { resolve_env(pins({{"left_pad", "1.0"}}), reg); });
    REQUIRE(err);
    CHECK(err->code() == Errc::UnknownPackage);
    CHECK(std::string(err->what()) == "no such package: left_pad");

    err = trap([&] { resolve_env(pins({{"numpy", "9.9"}}), reg); });
    REQUIRE(err);
    CHECK(err->code() == Errc::UnknownVersion);
    CHECK(std::string(err->what()) == "numpy has no version 9.9");
  }

  SUBCASE("unsatisfiable and unknown transitive dependencies") {
    auto broken = PackageRegistry::from_json(nlohmann::json::parse(R"({
      "packages": {
        "app":  {"versions": ["1.0"], "latest": "1.0"},
        "tool": {"versions": ["1.0"], "latest": "1.0"},
        "lib":  {"versions": ["1.0"], "latest": "1.0"}
      },
      "dependencies": {
        "app@1.0":  [{"pkg": "lib", "range": ">=2"}],
        "tool@1.0": [{"pkg": "ghost", "range": "*"}]
      }
    })"));

    auto err = trap([&] { resolve_env(pins({{"app", "1.0"}}), broken); });
    REQUIRE(err);
    CHECK(err->code() == Errc::Unsatisfiable);
    CHECK(std::string(err->what()) ==
          "no version of lib satisfies >=2 (required by app)");

    err = trap([&] { resolve_env(pins({{"tool", "1.0"}}), broken); });
    REQUIRE(err);
    CHECK(err->code() == Errc::UnknownPackage);
    CHECK(std::string(err->what()) == "tool depends on unknown package ghost");
  }
}

TEST_CASE("whitelist violations come out in pin order") {
  std::set<std::string> allow{"numpy", "pandas"};

  WhitelistResult ok = check_whitelist(
      pins({{"pandas", "2.2.2"}, {"numpy", "2.1.1"}}), allow);
  CHECK(ok.ok);
  CHECK(ok.violations.empty());

  WhitelistResult bad = check_whitelist(
      pins({{"pandas", "2.2.2"}, {"left_pad", "1.0"}, {"scipy", "1.11.4"}}),
      allow);
  CHECK_FALSE(bad.ok);
  auto expected = std::vector<std::string>{"left_pad", "scipy"};
  CHECK(bad.violations == expected);  // map order, not insertion order

  // Empty whitelist bans every pin; no pins always passes.
  CHECK_FALSE(check_whitelist(pins({{"numpy", "2.1.1"}}), {}).ok);
  CHECK(check_whitelist(pins({}), {}).ok);

  // A sandbox without a whitelist allows anything.
  Sandbox open_box(demo_registry(), std::nullopt, {}, 1000);
  CHECK(open_box.check(pins({{"anything", "0"}})).ok);
  CHECK_FALSE(open_box.whitelist().has_value());

  Sandbox closed_box(demo_registry(), std::set<std::string>{"numpy"}, {}, 1000);
  CHECK(closed_box.check(pins({{"numpy", "2.1.1"}})).ok);
  CHECK_FALSE(closed_box.check(pins({{"pandas", "2.2.2"}})).ok);
}

TEST_CASE("check_conflicts matches the first rule both sides satisfy") {
  PackageRegistry reg = demo_registry();

  ResolvedEnv clash = resolve_env(pins({{"numpy", "2.0.0"}, {"scipy", "1.11.4"}}), reg);
  ConflictResult hit = check_conflicts(clash, reg);
  CHECK_FALSE(hit.ok);
  CHECK(hit.message == "numpy 2 removed APIs scipy 1.11 needs");
  CHECK(hit.a_package == "numpy");
  CHECK(hit.b_package == "scipy");

  // numpy 1.x falls outside the a-side range: no conflict.
  ResolvedEnv fine = resolve_env(pins({{"numpy", "1.26.4"}, {"scipy", "1.11.4"}}), reg);
  CHECK(check_conflicts(fine, reg).ok);

  // One side absent: no conflict.
  CHECK(check_conflicts(resolve_env(pins({{"scipy", "1.11.4"}}), reg), reg).ok);
  CHECK(check_conflicts(ResolvedEnv{}, reg).ok);

  // Rule order decides when several rules match.
  auto stacked = PackageRegistry::from_json(nlohmann::json::parse(R"({
    "packages": {
      "a": {"versions": ["1.0"], "latest": "1.0"},
      "b": {"versions": ["1.0"], "latest": "1.0"}
    },
    "conflicts": [
      {"a": "a@*", "b": "b@*", "message": "first"},
      {"a": "b@*", "b": "a@*", "message": "second"}
    ]
  })"));
  ResolvedEnv both = resolve_env(pins({{"a", "1.0"}, {"b", "1.0"}}), stacked);
  CHECK(check_conflicts(both, stacked).message == "first");
}

TEST_CASE("in-process steps evaluate the plan against only their inputs") {
  Sandbox box(demo_registry());
  ModelNode node = make_node("double_up", "from(src) | filter(v >= 2)", {"src"});
  std::map<std::string, Table> inputs{{"src", src_table()}};
  ResolvedEnv env = resolve_env(pins({}), demo_registry());

  CHECK(box.execute_calls() == 0);
  StepOutcome out = box.execute_step(node, env, inputs, IsolationMode::InProcess);
  CHECK(box.execute_calls() == 1);
  CHECK(out.status == StepStatus::Ok);
  CHECK(out.log_lines.empty());
  REQUIRE(out.output.has_value());
  Table expected = make_table(Schema{{{"v", ColumnType::Int64, true}}},
                              {{I(2)}, {I(3)}});
  CHECK(out.output->equals(expected));

  // Evaluation failures are reported, not thrown.
  ModelNode bad = make_node("bad", "from(ghost)", {"ghost"});
  StepOutcome failed = box.execute_step(bad, env, inputs, IsolationMode::InProcess);
  CHECK(box.execute_calls() == 2);
  CHECK(failed.status == StepStatus::Failed);
  CHECK_FALSE(failed.output.has_value());
  REQUIRE(failed.log_lines.size() == 1);
  CHECK(failed.log_lines[0] == "UnknownInput: unknown input: ghost");
}

TEST_CASE("a package conflict fails the step before any evaluation") {
  PackageRegistry reg = demo_registry();
  ResolvedEnv clash = resolve_env(pins({{"numpy", "2.0.0"}, {"scipy", "1.11.4"}}), reg);
  ModelNode node = make_node("stats", "from(src) | filter(v >= 2)", {"src"});
  std::map<std::string, Table> inputs{{"src", src_table()}};

  // Empty worker command: reaching the subprocess path would throw, so a
  // clean Failed outcome proves the conflict short-circuited first.
  Sandbox box(reg, std::nullopt, {}, 1000);
  for (auto mode : {IsolationMode::InProcess, IsolationMode::Subprocess}) {
    StepOutcome out = box.execute_step(node, clash, inputs, mode);
    CHECK(out.status == StepStatus::Failed);
    CHECK_FALSE(out.output.has_value());
    auto traceback = std::vector<std::string>{
        "Traceback (most recent call last):",
        "  File \"steps/stats.py\", line 1, in <module>",
        "    import numpy",
        "  File \"site-packages/numpy/__init__.py\", line 22, in <module>",
        "    from numpy.compat import scipy_compat",
        "ImportError: numpy 2 removed APIs scipy 1.11 needs",
    };
    CHECK(out.log_lines == traceback);
  }
  CHECK(box.execute_calls() == 2);
}

TEST_CASE("step worker speaks the length-prefixed frame protocol") {
  auto le32 = [](uint32_t v) {
    std::string s(4, '\0');
    s[0] = static_cast<char>(v & 0xff);
    s[1] = static_cast<char>((v >> 8) & 0xff);
    s[2] = static_cast<char>((v >> 16) & 0xff);
    s[3] = static_cast<char>((v >> 24) & 0xff);
    return s;
  };
  auto framed = [&](const std::string& payload) {
    return le32(static_cast<uint32_t>(payload.size())) + payload;
  };
  // Runs one request through the worker loop over loopback pipes.
  auto roundtrip = [](const std::string& request) {
    int req[2], rep[2];
    REQUIRE(::pipe(req) == 0);
    REQUIRE(::pipe(rep) == 0);
    if (!request.empty()) {
      REQUIRE(::write(req[1], request.data(), request.size()) ==
              static_cast<ssize_t>(request.size()));
    }
    ::close(req[1]);
    int rc = run_step_worker(req[0], rep[1]);
    ::close(rep[1]);
    ::close(req[0]);
    std::string reply;
    char buf[4096];
    for (ssize_t r; (r = ::read(rep[0], buf, sizeof buf)) > 0;) {
      reply.append(buf, static_cast<size_t>(r));
    }
    ::close(rep[0]);
    return std::pair<int, std::string>(rc, reply);
  };

  std::string table_bytes = encode_table(src_table());

  SUBCASE("successful evaluation replies status 0 plus the encoded table") {
    std::string request = framed("from(src) | filter(v >= 2)") +
                          framed(le32(1)) + framed("src") + framed(table_bytes);
    auto [rc, reply] = roundtrip(request);
    CHECK(rc == 0);
    REQUIRE(reply.size() >= 5);
    CHECK(static_cast<uint8_t>(reply[0]) == 0);
    std::string payload = reply.substr(5);
    CHECK(framed(payload).substr(0, 4) == reply.substr(1, 4));  // length agrees
    Table expected = make_table(Schema{{{"v", ColumnType::Int64, true}}},
                                {{I(2)}, {I(3)}});
    CHECK(decode_table(payload).equals(expected));
  }

  SUBCASE("evaluation errors come back in-band as status 1") {
    std::string request = framed("from(ghost)") + framed(le32(1)) +
                          framed("src") + framed(table_bytes);
    auto [rc, reply] = roundtrip(request);
    CHECK(rc == 0);
    REQUIRE(reply.size() >= 5);
    CHECK(static_cast<uint8_t>(reply[0]) == 1);
    CHECK(reply.substr(5) == "UnknownInput: unknown input: ghost");
  }

  SUBCASE("protocol violations exit non-zero without a reply") {
    CHECK(roundtrip("").first == 2);                       // no plan frame
    CHECK(roundtrip(framed("from(t)")).first == 2);        // no count frame
    CHECK(roundtrip(framed("from(t)") + framed("xy")).first == 2);  // bad count
    CHECK(roundtrip(framed("from(t)") + framed(le32(1)) + framed("t")).first ==
          2);  // missing table frame
    CHECK(roundtrip(framed("from(t)") + framed(le32(1)) + framed("t") +
                    framed("garbage"))
              .first == 2);  // table bytes don't decode
  }
}

TEST_CASE("subprocess isolation returns byte-identical results") {
  Table a = make_table(Schema{{{"k", ColumnType::Int64, false},
                               {"v", ColumnType::Int64, true}}},
                       {{I(1), I(10)}, {I(1), N()}, {I(2), I(5)}, {I(3), I(7)}});
  Table b = make_table(Schema{{{"k", ColumnType::Int64, false},
                               {"w", ColumnType::String, true}}},
                       {{I(1), S("x")}, {I(2), S("y")}, {I(2), S("z")}});
  std::map<std::string, Table> inputs{{"a", a}, {"b", b}};
  ModelNode node = make_node(
      "rollup",
      "from(a) | join(b, on = k == k) | agg(by = [k], n = count(*), s = sum(v))"
      " | sort(k)",
      {"a", "b"});
  ResolvedEnv env;

  Sandbox box(demo_registry(), std::nullopt, {MINILAKE_CLI_PATH, "step-worker"},
              30000);
  StepOutcome local = box.execute_step(node, env, inputs, IsolationMode::InProcess);
  StepOutcome remote = box.execute_step(node, env, inputs, IsolationMode::Subprocess);

  REQUIRE(local.status == StepStatus::Ok);
  REQUIRE(remote.status == StepStatus::Ok);
  REQUIRE(local.output.has_value());
  REQUIRE(remote.output.has_value());
  CHECK(encode_table(*local.output) == encode_table(*remote.output));

  Table expected = make_table(Schema{{{"k", ColumnType::Int64, false},
                                      {"n", ColumnType::Int64, false},
                                      {"s", ColumnType::Int64, true}}},
                              {{I(1), I(2), I(10)}, {I(2), I(2), I(10)}});
  CHECK(local.output->equals(expected));

  // Failures carry the same log line in both modes.
  ModelNode bad = make_node("bad", "from(ghost)", {"ghost"});
  StepOutcome local_bad = box.execute_step(bad, env, inputs, IsolationMode::InProcess);
  StepOutcome remote_bad = box.execute_step(bad, env, inputs, IsolationMode::Subprocess);
  CHECK(local_bad.status == StepStatus::Failed);
  CHECK(remote_bad.status == StepStatus::Failed);
  CHECK(local_bad.log_lines == remote_bad.log_lines);
  CHECK(box.execute_calls() == 4);
}

TEST_CASE("broken workers surface as IsolationError, never as output") {
  ModelNode node = make_node("step", "from(src)", {"src"});
  std::map<std::string, Table> inputs{{"src", src_table()}};
  ResolvedEnv env;

  auto fails_with = [&](std::vector<std::string> cmd, int timeout_ms,
                        const char* needle) {
    Sandbox box(demo_registry(), std::nullopt, std::move(cmd), timeout_ms);
    auto err = trap([&] {
      box.execute_step(node, env, inputs, IsolationMode::Subprocess);
    });
    REQUIRE(err);
    CAPTURE(needle);
    CHECK(err->code() == Errc::IsolationError);
    CHECK(std::string(err->what()).find(needle) != std::string::npos);
  };

  fails_with({}, 1000, "no step worker configured");
  fails_with({"/bin/sh", "-c", "exec sleep 30"}, 150, "timed out after 150 ms");
  fails_with({"/bin/sh", "-c", "cat >/dev/null; exit 3"}, 5000,
             "exited abnormally");
  fails_with({"/bin/sh", "-c", "cat >/dev/null; printf ok"}, 5000,
             "truncated worker reply");
  fails_with({"/bin/sh", "-c", "cat >/dev/null; printf 'Z\\0\\0\\0\\0'"}, 5000,
             "unknown worker status byte");
  fails_with({"/bin/sh", "-c", "cat >/dev/null; printf 'Z\\1\\0\\0\\0'"}, 5000,
             "malformed worker reply framing");
}

TEST_CASE("default worker command comes from MINILAKE_WORKER_EXE") {
  const char* saved = std::getenv("MINILAKE_WORKER_EXE");
  std::string saved_value = saved ? saved : "";

  ::setenv("MINILAKE_WORKER_EXE", "/opt/lake/minilake", 1);
  auto cmd = default_worker_command();
  auto expected = std::vector<std::string>{"/opt/lake/minilake", "step-worker"};
  CHECK(cmd == expected);

  ::unsetenv("MINILAKE_WORKER_EXE");
  CHECK(default_worker_command().empty());

  if (saved) ::setenv("MINILAKE_WORKER_EXE", saved_value.c_str(), 1);
}
