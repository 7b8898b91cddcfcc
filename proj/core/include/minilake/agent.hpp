#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "minilake/tool_client.hpp"
#include "json.hpp"

namespace minilake {

enum class ActionType { ToolCall, Finish };

struct Action {
  ActionType type = ActionType::Finish;
  std::string name;            // ToolCall
  nlohmann::json arguments;    // ToolCall
  bool success = false;        // Finish
  std::string summary;         // Finish

  static Action tool(std::string name, nlohmann::json arguments);
  static Action finish(bool success, std::string summary);
};

struct EpisodeStep {
  Action action;
  RpcResult result;  // empty for the final Finish step
  int64_t wall_ms = 0;
};

enum class EpisodeOutcome { Success, Failure };

struct Transcript {
  std::string goal;
  std::vector<EpisodeStep> steps;  // tool calls plus the closing Finish
  uint64_t tool_calls = 0;
  int64_t duration_ms = 0;
  EpisodeOutcome outcome = EpisodeOutcome::Failure;
  std::string outcome_reason;

  nlohmann::json to_json() const;
};

struct Observation {
  const Transcript& transcript;
};

// Policies must be pure functions of the transcript so deterministic
// policies replay identically.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual Action next_action(const Observation& observation) = 0;
};

struct Budget {
  uint64_t max_tool_calls = 20;
  int64_t per_call_timeout_ms = 30'000;
};

// Observe-act loop until FINISH or budget exhaustion (outcome FAILURE,
// reason BUDGET). Tool and transport errors land in step results; the
// loop itself never throws on them.
Transcript run_episode(AgentPolicy& policy, ToolClient& client,
                       const std::string& goal, const Budget& budget = {});

// Log-signature table: a substring of a registry conflict message plus
// the transitive package it implicates.
struct ConflictSignature {
  std::string substring;
  std::string package;
};

std::vector<ConflictSignature> default_conflict_signatures();

// Deterministic repair playbook: find the failed run, read its logs,
// match a conflict signature, pick the greatest registry version outside
// the conflicting range, pin it on a debug branch, re-run, and request a
// gated merge back to main.
class RepairPolicy final : public AgentPolicy {
 public:
  explicit RepairPolicy(
      std::vector<ConflictSignature> signatures = default_conflict_signatures());

  Action next_action(const Observation& observation) override;

 private:
  std::vector<ConflictSignature> signatures_;
};

// Emits schema-valid but semantically arbitrary tool calls; pure given
// the transcript (the RNG is re-derived from seed and step index).
class FuzzPolicy final : public AgentPolicy {
 public:
  FuzzPolicy(uint64_t seed, uint64_t calls);

  Action next_action(const Observation& observation) override;

 private:
  uint64_t seed_;
  uint64_t calls_;
};

}  // namespace minilake
