#include "minilake/run_engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "minilake/codec.hpp"
#include "minilake/fs_util.hpp"

namespace fs = std::filesystem;

namespace minilake {

namespace {

std::optional<Table> load_table_at(const Catalog& catalog, const Commit& commit,
                                   const std::string& name) {
  auto it = commit.table_map.find(name);
  if (it == commit.table_map.end()) return std::nullopt;
  auto bytes = catalog.get_object(it->second.data_id);
  if (!bytes) {
    raise(Errc::DanglingSnapshot, "data object missing for table " + name);
  }
  return decode_table(*bytes);
}

}  // namespace

const char* run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::Running: return "RUNNING";
    case RunStatus::Success: return "SUCCESS";
    case RunStatus::Failed: return "FAILED";
    case RunStatus::Blocked: return "BLOCKED";
  }
  return "?";
}

RunStatus run_status_from_name(const std::string& name) {
  if (name == "RUNNING") return RunStatus::Running;
  if (name == "SUCCESS") return RunStatus::Success;
  if (name == "FAILED") return RunStatus::Failed;
  if (name == "BLOCKED") return RunStatus::Blocked;
  raise(Errc::CorruptData, "unknown run status: " + name);
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json step = {{"name", s.name},
                           {"status", s.status},
                           {"row_count", s.row_count}};
    step["data_id"] = s.data_id ? nlohmann::json(s.data_id->hex())
                                : nlohmann::json(nullptr);
    steps_json.push_back(std::move(step));
  }
  return {{"run_id", run_id},
          {"project", project_name},
          {"project_dir", project_dir.string()},
          {"start_commit", start_commit.hex()},
          {"code_hash", code_hash.hex()},
          {"run_branch", run_branch},
          {"target_branch", target_branch},
          {"status", run_status_name(status)},
          {"no_merge", no_merge},
          {"steps", std::move(steps_json)},
          {"merged_commit", merged_commit ? nlohmann::json(merged_commit->hex())
                                          : nlohmann::json(nullptr)},
          {"error", error},
          {"started_at", started_at},
          {"ended_at", ended_at}};
}

RunRecord RunRecord::from_json(const nlohmann::json& doc) {
  RunRecord rec;
  rec.run_id = doc.at("run_id").get<std::string>();
  rec.project_name = doc.at("project").get<std::string>();
  rec.project_dir = doc.at("project_dir").get<std::string>();
  rec.start_commit = ObjectId::from_hex(doc.at("start_commit").get<std::string>());
  rec.code_hash = ObjectId::from_hex(doc.at("code_hash").get<std::string>());
  rec.run_branch = doc.at("run_branch").get<std::string>();
  rec.target_branch = doc.at("target_branch").get<std::string>();
  rec.status = run_status_from_name(doc.at("status").get<std::string>());
  rec.no_merge = doc.at("no_merge").get<bool>();
  for (const auto& s : doc.at("steps")) {
    StepRecord step;
    step.name = s.at("name").get<std::string>();
    step.status = s.at("status").get<std::string>();
    step.row_count = s.at("row_count").get<uint64_t>();
    if (!s.at("data_id").is_null()) {
      step.data_id = ObjectId::from_hex(s.at("data_id").get<std::string>());
    }
    rec.steps.push_back(std::move(step));
  }
  if (!doc.at("merged_commit").is_null()) {
    rec.merged_commit =
        ObjectId::from_hex(doc.at("merged_commit").get<std::string>());
  }
  rec.error = doc.at("error").get<std::string>();
  rec.started_at = doc.at("started_at").get<int64_t>();
  rec.ended_at = doc.at("ended_at").get<int64_t>();
  return rec;
}

RunEngine::RunEngine(Workspace& workspace) : ws_(workspace) {}

void RunEngine::set_worker_command(std::vector<std::string> command) {
  worker_command_ = std::move(command);
}

void RunEngine::persist(const RunRecord& record) const {
  fs::path dir = ws_.runs_dir() / record.run_id;
  fs::create_directories(dir);
  write_json_file_atomic(dir / "record.json", record.to_json());
}

RunEngine::DagOutcome RunEngine::execute_dag(const PipelineSpec& spec,
                                             const std::string& run_branch,
                                             IsolationMode isolation,
                                             const std::string& author,
                                             const LogFn& log) {
  DagOutcome out;
  Sandbox sandbox(ws_.load_registry(), ws_.load_whitelist(), worker_command_);
  std::vector<ModelNode> order = build_dag(spec);
  std::map<std::string, Table> produced;

  for (size_t i = 0; i < order.size(); ++i) {
    const ModelNode& model = order[i];
    StepRecord step;
    step.name = model.name;

    if (!out.ok) {
      step.status = "SKIPPED";
      out.steps.push_back(std::move(step));
      continue;
    }

    log(model.name, "INFO", "step " + model.name + ": start");
    try {
      ResolvedEnv env = resolve_env(model.env, sandbox.registry());

      std::map<std::string, Table> inputs;
      Commit head = ws_.catalog().load_commit(ws_.catalog().resolve_ref(run_branch));
      for (const auto& input : model.inputs) {
        auto it = produced.find(input);
        if (it != produced.end()) {
          inputs.emplace(input, it->second);
          continue;
        }
        auto table = load_table_at(ws_.catalog(), head, input);
        if (!table) {
          raise(Errc::UnknownInput, "input table '" + input +
                                        "' not found on branch " + run_branch);
        }
        inputs.emplace(input, std::move(*table));
      }

      StepOutcome outcome = sandbox.execute_step(model, env, inputs, isolation);
      execute_calls_ = sandbox.execute_calls();
      if (outcome.status == StepStatus::Failed) {
        for (const auto& line : outcome.log_lines) {
          log(model.name, "ERROR", line);
        }
        step.status = "FAILED";
        out.ok = false;
        out.error = "step " + model.name + " failed";
      } else {
        step.status = "OK";
        step.row_count = outcome.output->row_count;
        if (model.materialization == Materialization::Replace) {
          Commit c = ws_.commit_table(
              run_branch, model.name, *outcome.output,
              "materialize " + model.name, author);
          step.data_id = c.table_map.at(model.name).data_id;
        }
        produced.emplace(model.name, std::move(*outcome.output));
        log(model.name, "INFO",
            "step " + model.name + ": OK (" +
                std::to_string(step.row_count) + " rows)");
      }
    } catch (const Error& e) {
      log(model.name, "ERROR",
          std::string(e.kind()) + ": " + e.what());
      step.status = "FAILED";
      out.ok = false;
      out.error = "step " + model.name + " failed: " + e.what();
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

RunRecord RunEngine::run_pipeline(const PipelineSpec& spec,
                                  const std::string& target_branch,
                                  const Principal& principal,
                                  const RunOptions& options) {
  // Target must be a real branch before anything is recorded.
  auto heads = ws_.catalog().list_branches();
  const BranchRef* target = nullptr;
  for (const auto& b : heads) {
    if (b.name == target_branch) target = &b;
  }
  if (!target) {
    raise(Errc::UnknownBranch, "no such branch: " + target_branch);
  }

  RunRecord rec;
  rec.run_id = ws_.next_run_id();
  rec.project_name = spec.name;
  rec.project_dir = fs::absolute(spec.project_dir);
  rec.start_commit = target->head;
  rec.code_hash = code_hash(spec);
  rec.run_branch = "run/" + rec.run_id;
  rec.target_branch = target_branch;
  rec.no_merge = options.no_merge;
  rec.started_at = ws_.clock()();
  rec.ended_at = rec.started_at;

  uint64_t seq = 0;
  std::ofstream log_sink;
  LogFn log = [&](const std::string& step, const std::string& severity,
                  const std::string& text) {
    nlohmann::json line = {{"run_id", rec.run_id},
                           {"step", step},
                           {"seq", seq++},
                           {"severity", severity},
                           {"text", text}};
    log_sink << line.dump() << "\n";
    log_sink.flush();
  };

  fs::create_directories(ws_.runs_dir() / rec.run_id);
  log_sink.open(ws_.runs_dir() / rec.run_id / "logs.jsonl",
                std::ios::app | std::ios::binary);
  persist(rec);

  auto finish = [&](RunStatus status, const std::string& error) -> RunRecord {
    rec.status = status;
    rec.error = error;
    rec.ended_at = ws_.clock()();
    persist(rec);
    return rec;
  };

  Decision can_read = authorize(principal, {ActionKind::Read, ""});
  Decision can_write = authorize(principal, {ActionKind::Write, rec.run_branch});
  if (!can_read.allowed || !can_write.allowed) {
    const std::string& why = can_read.allowed ? can_write.reason : can_read.reason;
    log("", "ERROR", "not authorized: " + why);
    return finish(RunStatus::Blocked, "not authorized: " + why);
  }

  // Whitelist pre-gate across every model, before any branch or step.
  {
    Sandbox gate(ws_.load_registry(), ws_.load_whitelist());
    std::string violations;
    for (const auto& model : spec.models) {
      WhitelistResult wl = gate.check(model.env);
      if (wl.ok) continue;
      for (const auto& pkg : wl.violations) {
        if (!violations.empty()) violations += ", ";
        violations += model.name + " pins " + pkg;
      }
    }
    if (!violations.empty()) {
      std::string msg = "whitelist violation: " + violations;
      log("", "ERROR", msg);
      return finish(RunStatus::Blocked, msg);
    }
  }

  ws_.catalog().create_branch(rec.run_branch, rec.start_commit.hex());

  DagOutcome dag;
  try {
    dag = execute_dag(spec, rec.run_branch, options.isolation,
                      principal.key_id, log);
  } catch (const Error& e) {
    // Cycle detection, storage failures: nothing executed or partial
    // state confined to the run branch.
    log("", "ERROR", std::string(e.kind()) + ": " + e.what());
    rec.steps = {};
    return finish(RunStatus::Failed, e.what());
  }
  rec.steps = dag.steps;

  if (!dag.ok) {
    log("", "ERROR", "run failed: " + dag.error);
    return finish(RunStatus::Failed, dag.error);
  }

  if (options.no_merge) {
    log("", "INFO", "run complete on " + rec.run_branch + " (merge skipped)");
    return finish(RunStatus::Success, "");
  }

  try {
    GateOutcome gate =
        ws_.governance().gated_merge(principal, rec.run_branch, target_branch);
    switch (gate.status) {
      case GateStatus::Merged:
        rec.merged_commit = gate.commit->id;
        log("", "INFO",
            "merged into " + target_branch + " as " + gate.commit->id.short_hex());
        return finish(RunStatus::Success, "");
      case GateStatus::Denied:
        log("", "ERROR", "merge denied: " + gate.reason);
        return finish(RunStatus::Blocked, "merge denied: " + gate.reason);
      case GateStatus::VerificationFailed: {
        for (const auto& check : gate.report->checks) {
          if (!check.passed) {
            log("", "ERROR",
                "verification failed: " + check.description + ": " + check.message);
          }
        }
        return finish(RunStatus::Blocked, "verification failed");
      }
    }
  } catch (const Error& e) {
    log("", "ERROR", std::string(e.kind()) + ": " + e.what());
    return finish(RunStatus::Blocked,
                  std::string(e.kind()) + ": " + e.what());
  }
  return finish(RunStatus::Blocked, "unreachable");
}

std::vector<RunRecord> RunEngine::get_runs(const RunFilter& filter) const {
  std::vector<RunRecord> runs;
  if (!fs::exists(ws_.runs_dir())) return runs;
  for (const auto& entry : fs::directory_iterator(ws_.runs_dir())) {
    fs::path record = entry.path() / "record.json";
    if (!fs::exists(record)) continue;
    RunRecord rec = RunRecord::from_json(read_json_file(record));
    if (filter.status && rec.status != *filter.status) continue;
    if (filter.project && rec.project_name != *filter.project) continue;
    runs.push_back(std::move(rec));
  }
  // run ids are monotonic, so id order is creation order; newest first.
  std::sort(runs.begin(), runs.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return a.run_id > b.run_id;
            });
  if (filter.limit > 0 && runs.size() > filter.limit) {
    runs.resize(filter.limit);
  }
  return runs;
}

RunRecord RunEngine::get_run(const std::string& run_id) const {
  fs::path record = ws_.runs_dir() / run_id / "record.json";
  if (!fs::exists(record)) {
    raise(Errc::UnknownRun, "no such run: " + run_id);
  }
  return RunRecord::from_json(read_json_file(record));
}

std::vector<JobLog> RunEngine::get_run_logs(const std::string& run_id) const {
  if (!fs::exists(ws_.runs_dir() / run_id)) {
    raise(Errc::UnknownRun, "no such run: " + run_id);
  }
  std::vector<JobLog> logs;
  fs::path file = ws_.runs_dir() / run_id / "logs.jsonl";
  if (!fs::exists(file)) return logs;
  std::ifstream in(file, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    JobLog log;
    log.run_id = doc.at("run_id").get<std::string>();
    log.step = doc.at("step").get<std::string>();
    log.seq = doc.at("seq").get<uint64_t>();
    log.severity = doc.at("severity").get<std::string>();
    log.text = doc.at("text").get<std::string>();
    logs.push_back(std::move(log));
  }
  return logs;
}

ReplayResult RunEngine::replay_check(const std::string& run_id) {
  RunRecord rec = get_run(run_id);
  if (rec.status != RunStatus::Success) {
    raise(Errc::InvalidArgument,
          "run " + run_id + " is " + run_status_name(rec.status) +
              "; only successful runs replay");
  }

  PipelineSpec spec = load_project(rec.project_dir);
  ObjectId code_now = code_hash(spec);
  if (code_now != rec.code_hash) {
    return {ReplayStatus::Diverged,
            "code_hash mismatch: run " + rec.code_hash.short_hex() +
                " vs current " + code_now.short_hex()};
  }

  std::string branch = "replay/" + run_id;
  auto branches = ws_.catalog().list_branches();
  bool exists = std::any_of(branches.begin(), branches.end(),
                            [&](const BranchRef& b) { return b.name == branch; });
  if (exists) ws_.catalog().delete_branch(branch);
  ws_.catalog().create_branch(branch, rec.start_commit.hex());

  auto no_log = [](const std::string&, const std::string&, const std::string&) {};
  DagOutcome dag = execute_dag(spec, branch, IsolationMode::InProcess,
                               "replay", no_log);

  ReplayResult result;
  if (!dag.ok) {
    result.status = ReplayStatus::Diverged;
    result.report = "replay execution failed: " + dag.error;
  } else {
    std::string diffs;
    for (size_t i = 0; i < rec.steps.size() && i < dag.steps.size(); ++i) {
      const auto& before = rec.steps[i];
      const auto& after = dag.steps[i];
      bool same = before.data_id.has_value() == after.data_id.has_value() &&
                  (!before.data_id || *before.data_id == *after.data_id);
      if (!same) {
        if (!diffs.empty()) diffs += ", ";
        diffs += before.name;
      }
    }
    if (!diffs.empty()) {
      result.status = ReplayStatus::Diverged;
      result.report = "data ids differ for: " + diffs;
    } else {
      result.report = "all table snapshots identical";
    }
  }
  ws_.catalog().delete_branch(branch);
  return result;
}

}  // namespace minilake
