#include "minilake/agent.hpp"

#include <chrono>
#include <random>

#include "minilake/registry.hpp"

namespace minilake {

namespace {

int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

nlohmann::json rpc_result_to_json(const RpcResult& r) {
  if (r.ok) return {{"ok", true}, {"result", r.result}};
  return {{"ok", false},
          {"error_code", r.error_code},
          {"error_message", r.error_message},
          {"error_kind", r.error_kind}};
}

}  // namespace

Action Action::tool(std::string name, nlohmann::json arguments) {
  Action a;
  a.type = ActionType::ToolCall;
  a.name = std::move(name);
  a.arguments = std::move(arguments);
  return a;
}

Action Action::finish(bool success, std::string summary) {
  Action a;
  a.type = ActionType::Finish;
  a.success = success;
  a.summary = std::move(summary);
  return a;
}

nlohmann::json Transcript::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json action;
    if (s.action.type == ActionType::ToolCall) {
      action = {{"type", "TOOL_CALL"},
                {"name", s.action.name},
                {"arguments", s.action.arguments}};
    } else {
      action = {{"type", "FINISH"},
                {"success", s.action.success},
                {"summary", s.action.summary}};
    }
    steps_json.push_back({{"action", std::move(action)},
                          {"result", rpc_result_to_json(s.result)},
                          {"wall_ms", s.wall_ms}});
  }
  return {{"goal", goal},
          {"steps", std::move(steps_json)},
          {"tool_calls", tool_calls},
          {"duration_ms", duration_ms},
          {"outcome", outcome == EpisodeOutcome::Success ? "SUCCESS" : "FAILURE"},
          {"outcome_reason", outcome_reason}};
}

Transcript run_episode(AgentPolicy& policy, ToolClient& client,
                       const std::string& goal, const Budget& budget) {
  Transcript t;
  t.goal = goal;
  int64_t started = now_ms();

  for (;;) {
    Action action = policy.next_action({t});

    if (action.type == ActionType::Finish) {
      EpisodeStep step;
      step.action = action;
      t.steps.push_back(std::move(step));
      t.outcome = action.success ? EpisodeOutcome::Success
                                 : EpisodeOutcome::Failure;
      t.outcome_reason = action.summary;
      break;
    }

    if (t.tool_calls >= budget.max_tool_calls) {
      t.outcome = EpisodeOutcome::Failure;
      t.outcome_reason = "BUDGET";
      break;
    }

    EpisodeStep step;
    step.action = action;
    int64_t call_started = now_ms();
    step.result = client.call_tool(action.name, action.arguments);
    step.wall_ms = now_ms() - call_started;
    t.steps.push_back(std::move(step));
    ++t.tool_calls;
  }

  t.duration_ms = now_ms() - started;
  return t;
}

std::vector<ConflictSignature> default_conflict_signatures() {
  return {{"numpy.dtype size changed", "numpy"}};
}

RepairPolicy::RepairPolicy(std::vector<ConflictSignature> signatures)
    : signatures_(std::move(signatures)) {}

Action RepairPolicy::next_action(const Observation& observation) {
  const Transcript& t = observation.transcript;
  size_t n = t.steps.size();

  // Any failed tool round means the playbook cannot continue.
  if (n > 0 && !t.steps.back().result.ok) {
    const auto& r = t.steps.back().result;
    return Action::finish(false, t.steps.back().action.name + " failed: " +
                                     r.error_message);
  }

  auto run_record = [&]() -> const nlohmann::json& {
    return t.steps[0].result.result.at("runs").at(0);
  };
  auto matched_signature = [&]() -> const ConflictSignature* {
    for (const auto& log : t.steps[1].result.result.at("logs")) {
      std::string text = log.at("text").get<std::string>();
      for (const auto& sig : signatures_) {
        if (text.find(sig.substring) != std::string::npos) return &sig;
      }
    }
    return nullptr;
  };
  auto failing_model = [&]() -> std::string {
    for (const auto& step : run_record().at("steps")) {
      if (step.at("status") == "FAILED") return step.at("name");
    }
    return run_record().at("steps").at(0).at("name");
  };
  auto debug_branch = [&]() {
    return "debug/" + run_record().at("run_id").get<std::string>();
  };

  switch (n) {
    case 0:
      return Action::tool("list_runs", {{"status", "FAILED"}, {"limit", 1}});
    case 1: {
      const auto& runs = t.steps[0].result.result.at("runs");
      if (runs.empty()) return Action::finish(true, "nothing to repair");
      return Action::tool("get_run_logs",
                          {{"run_id", runs.at(0).at("run_id")}});
    }
    case 2: {
      const ConflictSignature* sig = matched_signature();
      if (!sig) return Action::finish(false, "undiagnosed");
      return Action::tool("registry_info", {{"package", sig->package}});
    }
    case 3:
      return Action::tool("get_project",
                          {{"project", run_record().at("project")}});
    case 4:
      return Action::tool("create_branch",
                          {{"name", debug_branch()}, {"from_ref", "main"}});
    case 5: {
      const ConflictSignature* sig = matched_signature();
      const auto& info = t.steps[2].result.result;

      // The conflicting range for the implicated package comes from the
      // registry's own conflict rule whose message carried the signature.
      std::string range_text;
      for (const auto& rule : info.at("conflicts")) {
        std::string message = rule.at("message").get<std::string>();
        if (message.find(sig->substring) == std::string::npos) continue;
        std::string side = rule.at("b").get<std::string>();
        if (side.rfind(sig->package + "@", 0) == 0) {
          range_text = side.substr(sig->package.size() + 1);
          break;
        }
      }
      if (range_text.empty()) {
        return Action::finish(false, "no conflict rule matches the log signature");
      }
      VersionRange range = VersionRange::parse(range_text);
      std::string best;
      for (const auto& v : info.at("versions")) {
        std::string ver = v.get<std::string>();
        if (range.contains(ver)) continue;
        if (best.empty() || compare_versions(ver, best) > 0) best = ver;
      }
      if (best.empty()) {
        return Action::finish(false, "every registry version matches the "
                                     "conflicting range");
      }

      std::string model = failing_model();
      nlohmann::json env;
      for (const auto& m : t.steps[3].result.result.at("models")) {
        if (m.at("name") == model) env = m.at("env");
      }
      env["pins"][sig->package] = best;
      return Action::tool("set_model_env",
                          {{"project", run_record().at("project")},
                           {"model", model},
                           {"env", env}});
    }
    case 6:
      return Action::tool("run_pipeline",
                          {{"project", run_record().at("project")},
                           {"branch", debug_branch()},
                           {"no_merge", false}});
    case 7: {
      const auto& rec = t.steps[6].result.result;
      if (rec.at("status") != "SUCCESS") {
        return Action::finish(false, "debug run ended " +
                                         rec.at("status").get<std::string>() +
                                         ": " + rec.value("error", ""));
      }
      return Action::tool("request_merge",
                          {{"source", debug_branch()}, {"target", "main"}});
    }
    case 8: {
      const ConflictSignature* sig = matched_signature();
      std::string pinned;
      const auto& env = t.steps[5].action.arguments.at("env");
      if (env.contains("pins") && env.at("pins").contains(sig->package)) {
        pinned = env.at("pins").at(sig->package).get<std::string>();
      }
      return Action::finish(
          true, "pinned " + sig->package + " " + pinned + " and merged " +
                    debug_branch() + " into main");
    }
    default:
      return Action::finish(false, "playbook exhausted");
  }
}

FuzzPolicy::FuzzPolicy(uint64_t seed, uint64_t calls)
    : seed_(seed), calls_(calls) {}

Action FuzzPolicy::next_action(const Observation& observation) {
  uint64_t n = observation.transcript.steps.size();
  if (n >= calls_) return Action::finish(true, "fuzz complete");

  // Fresh engine per step keeps the policy pure in the transcript.
  std::mt19937_64 rng(seed_ * 0x9e3779b97f4a7c15ULL + n);
  auto pick = [&rng](std::initializer_list<const char*> options) {
    std::uniform_int_distribution<size_t> d(0, options.size() - 1);
    return std::string(*(options.begin() + d(rng)));
  };
  auto chance = [&rng](double p) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(rng) < p;
  };

  std::uniform_int_distribution<int> tool_die(0, 12);
  switch (tool_die(rng)) {
    case 0: {
      nlohmann::json args = nlohmann::json::object();
      if (chance(0.5)) args["status"] = pick({"FAILED", "SUCCESS", "BLOCKED"});
      if (chance(0.5)) args["limit"] = 3;
      return Action::tool("list_runs", args);
    }
    case 1:
      return Action::tool("get_run_logs",
                          {{"run_id", pick({"0001", "0002", "9999"})}});
    case 2:
      return Action::tool("list_branches", nlohmann::json::object());
    case 3:
      return Action::tool(
          "create_branch",
          {{"name", "debug/fz" + std::to_string(rng() % 64)},
           {"from_ref", pick({"main", "nope"})}});
    case 4:
      return Action::tool("list_tables",
                          {{"ref", pick({"main", "debug/fz1", "ghost"})}});
    case 5:
      return Action::tool("get_table_schema",
                          {{"ref", pick({"main", "ghost"})},
                           {"table", pick({"trips", "zones", "A", "missing"})}});
    case 6:
      return Action::tool(
          "query_table",
          {{"ref", pick({"main", "ghost"})},
           {"plan", pick({"from(trips) | limit(3)",
                          "from(zones) | filter(zone_id > 100)",
                          "from(trips) | agg(by = [], n = count(*))",
                          "from(missing) | limit(1)",
                          "from(trips | oops"})}});
    case 7:
      return Action::tool("diff_refs", {{"ref_a", pick({"main", "ghost"})},
                                        {"ref_b", pick({"main", "debug/fz2"})}});
    case 8:
      return Action::tool(
          "registry_info",
          {{"package", pick({"numpy", "pandas", "leftpad"})}});
    case 9:
      return Action::tool("get_project", {{"project", pick({"p", "ghost"})}});
    case 10: {
      nlohmann::json pins = nlohmann::json::object();
      std::string pkg = pick({"numpy", "pandas", "leftpad"});
      pins[pkg] = pick({"1.26.4", "2.0", "0.1"});
      return Action::tool("set_model_env",
                          {{"project", pick({"p", "ghost"})},
                           {"model", pick({"A", "B", "C"})},
                           {"env", {{"runtime", "3.11"}, {"pins", pins}}}});
    }
    case 11:
      return Action::tool(
          "run_pipeline",
          {{"project", pick({"p", "ghost"})},
           {"branch", pick({"main", "debug/fz3", "run/0001"})},
           {"no_merge", chance(0.5)}});
    default:
      return Action::tool("request_merge",
                          {{"source", pick({"main", "debug/fz1", "run/0001"})},
                           {"target", pick({"main", "debug/fz2"})}});
  }
}

}  // namespace minilake
