#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "minilake/object_store.hpp"
#include "minilake/plan_ast.hpp"

namespace minilake {

// Declared runtime plus exact package pins for one model.
struct EnvSpec {
  std::string runtime_version;
  std::map<std::string, std::string> pins;

  bool operator==(const EnvSpec&) const = default;
};

enum class Materialization { Replace, None };

struct ModelNode {
  std::string name;  // also the output table name on REPLACE
  std::vector<std::string> inputs;
  std::string plan_file;  // relative to project_dir, '/' separated
  Plan plan;
  Materialization materialization = Materialization::Replace;
  EnvSpec env;
};

struct PipelineSpec {
  std::string name;
  std::vector<ModelNode> models;
  std::filesystem::path project_dir;

  const ModelNode* find_model(const std::string& name) const;
};

// Reads and validates `pipeline.json` plus every referenced plan file.
// Model names must be unique, inputs non-empty, plans must parse; any
// structural problem is a ManifestError naming the offending piece.
PipelineSpec load_project(const std::filesystem::path& dir);

// Topological order with a deterministic tie-break: among ready nodes,
// lexicographically smallest name first. Inputs that are not model names
// are source tables, resolved against the catalog at run time.
// A model-reference cycle raises CycleError listing the cycle.
std::vector<ModelNode> build_dag(const PipelineSpec& spec);

// Hash over the raw bytes of the manifest and every plan file, keyed by
// '/'-normalized relative path: any code byte change moves the hash,
// moving the project directory does not.
ObjectId code_hash(const PipelineSpec& spec);

}  // namespace minilake
