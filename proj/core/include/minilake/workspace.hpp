#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "minilake/catalog.hpp"
#include "minilake/governance.hpp"
#include "minilake/object_store.hpp"
#include "minilake/registry.hpp"
#include "minilake/table.hpp"

namespace minilake {

// On-disk layout rooted at one directory:
//   objects/           content-addressed store
//   refs.json          branch heads
//   runs/<id>/         record.json + logs.jsonl per run
//   run_counter        next run id
//   projects/<name>/   workspace-hosted pipeline projects
//   keys.json, verifiers.json, gate_audit.jsonl
//   registry.json, whitelist.json (optional), scenario.json, episodes/
class Workspace {
 public:
  static Workspace init(const std::filesystem::path& root,
                        Clock clock = system_utc_clock());
  static Workspace open(const std::filesystem::path& root,
                        Clock clock = system_utc_clock());
  static bool is_initialized(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  Catalog& catalog() { return *catalog_; }
  const Catalog& catalog() const { return *catalog_; }
  ObjectStore& objects() { return *objects_; }
  Governance& governance() { return *governance_; }
  const Clock& clock() const { return clock_; }

  std::filesystem::path runs_dir() const { return root_ / "runs"; }
  std::filesystem::path projects_dir() const { return root_ / "projects"; }
  std::filesystem::path episodes_dir() const { return root_ / "episodes"; }
  std::filesystem::path registry_file() const { return root_ / "registry.json"; }
  std::filesystem::path whitelist_file() const { return root_ / "whitelist.json"; }
  std::filesystem::path scenario_file() const { return root_ / "scenario.json"; }

  bool has_registry() const;
  PackageRegistry load_registry() const;
  void save_registry(const PackageRegistry& registry);

  // Absent whitelist file = no restriction (nullopt).
  std::optional<std::set<std::string>> load_whitelist() const;
  void save_whitelist(const std::set<std::string>& packages);

  // Monotonic zero-padded run counter ("0001", "0002", ...).
  std::string next_run_id();

  // Copies a validated project (manifest + plan files) under
  // projects/<manifest name>/ and returns that name.
  std::string install_project(const std::filesystem::path& source_dir);
  bool has_project(const std::string& name) const;
  std::filesystem::path project_dir(const std::string& name) const;
  std::vector<std::string> list_projects() const;

  // New commit on branch with table_name replaced by the given table.
  Commit commit_table(const std::string& branch, const std::string& table_name,
                      const Table& table, const std::string& message,
                      const std::string& author);

 private:
  Workspace(std::filesystem::path root, Clock clock);

  std::filesystem::path root_;
  Clock clock_;
  std::unique_ptr<FsObjectStore> objects_;
  std::unique_ptr<FsRefStore> refs_;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<Governance> governance_;
};

bool valid_table_name(const std::string& name);

}  // namespace minilake
