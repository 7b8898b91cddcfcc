#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minilake/governance.hpp"
#include "minilake/pipeline.hpp"
#include "minilake/sandbox.hpp"
#include "minilake/workspace.hpp"
#include "json.hpp"

namespace minilake {

enum class RunStatus { Running, Success, Failed, Blocked };

const char* run_status_name(RunStatus status);
RunStatus run_status_from_name(const std::string& name);

struct StepRecord {
  std::string name;
  std::string status;  // OK | FAILED | SKIPPED
  std::optional<ObjectId> data_id;  // materialized output, REPLACE models
  uint64_t row_count = 0;
};

// FAILED means a step failed; BLOCKED means governance stopped the run
// (whitelist violation, denied or failed merge gate, merge contention).
// Both leave the target branch head untouched.
struct RunRecord {
  std::string run_id;
  std::string project_name;
  std::filesystem::path project_dir;
  ObjectId start_commit;
  ObjectId code_hash;
  std::string run_branch;
  std::string target_branch;
  RunStatus status = RunStatus::Running;
  bool no_merge = false;
  std::vector<StepRecord> steps;
  std::optional<ObjectId> merged_commit;
  std::string error;
  int64_t started_at = 0;
  int64_t ended_at = 0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& doc);
};

struct JobLog {
  std::string run_id;
  std::string step;  // empty for run-level lines
  uint64_t seq = 0;
  std::string severity;  // INFO | ERROR
  std::string text;
};

struct RunOptions {
  bool no_merge = false;
  IsolationMode isolation = IsolationMode::InProcess;
};

struct RunFilter {
  std::optional<RunStatus> status;
  std::optional<std::string> project;
  size_t limit = 0;  // 0 = unlimited
};

enum class ReplayStatus { Equal, Diverged };

struct ReplayResult {
  ReplayStatus status = ReplayStatus::Equal;
  std::string report;
};

class RunEngine {
 public:
  explicit RunEngine(Workspace& workspace);

  // Overrides the worker argv used for SUBPROCESS isolation.
  void set_worker_command(std::vector<std::string> command);

  // Branch-then-merge execution: runs the DAG on a fresh run/<id> branch
  // created from the target head, committing each REPLACE output as it
  // completes, then promotes atomically through the governance gate.
  // Every failure mode lands in the returned (and persisted) record;
  // the target branch is only ever touched by the final gated merge.
  RunRecord run_pipeline(const PipelineSpec& spec,
                         const std::string& target_branch,
                         const Principal& principal,
                         const RunOptions& options = {});

  std::vector<RunRecord> get_runs(const RunFilter& filter = {}) const;
  RunRecord get_run(const std::string& run_id) const;
  std::vector<JobLog> get_run_logs(const std::string& run_id) const;

  // Re-executes a successful run from (start_commit, code) on a
  // throwaway branch and compares the produced data ObjectIds per table.
  // A code_hash mismatch reports DIVERGED before any execution.
  ReplayResult replay_check(const std::string& run_id);

  // Total execute_step invocations across this engine's sandboxes.
  uint64_t execute_calls() const { return execute_calls_; }

 private:
  using LogFn = std::function<void(const std::string& step,
                                   const std::string& severity,
                                   const std::string& text)>;

  struct DagOutcome {
    bool ok = true;
    std::vector<StepRecord> steps;
    std::string error;
  };

  DagOutcome execute_dag(const PipelineSpec& spec,
                         const std::string& run_branch,
                         IsolationMode isolation, const std::string& author,
                         const LogFn& log);

  void persist(const RunRecord& record) const;

  Workspace& ws_;
  std::vector<std::string> worker_command_ = default_worker_command();
  uint64_t execute_calls_ = 0;
};

}  // namespace minilake
