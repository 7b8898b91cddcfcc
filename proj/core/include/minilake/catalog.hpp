#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "minilake/object_store.hpp"

namespace minilake {

// One table version: content addresses for schema and data.
struct TableSnapshot {
  ObjectId schema_id;
  ObjectId data_id;
  uint64_t row_count = 0;

  auto operator<=>(const TableSnapshot&) const = default;
};

// Immutable lake state node. id is the SHA-256 of the canonical encoding
// of every other field (UTF-8 JSON, sorted keys, no whitespace, integer
// UTC-second timestamps), so equal logical state hashes identically on
// every platform.
struct Commit {
  ObjectId id;
  std::vector<ObjectId> parents;  // 0..2
  std::map<std::string, TableSnapshot> table_map;
  std::string message;
  std::string author;
  int64_t timestamp = 0;
  std::optional<ObjectId> code_hash;

  std::string canonical_encoding() const;
  bool operator==(const Commit&) const = default;
};

struct BranchRef {
  std::string name;
  ObjectId head;
};

struct TableChange {
  TableSnapshot before;
  TableSnapshot after;
};

struct TableDiffSet {
  std::set<std::string> added;
  std::set<std::string> removed;
  std::map<std::string, TableChange> changed;

  bool empty() const { return added.empty() && removed.empty() && changed.empty(); }
};

using Clock = std::function<int64_t()>;
Clock system_utc_clock();

bool valid_branch_name(const std::string& name);

// Git-for-Data catalog over a write-once object store and CAS'd branch
// heads. Commits and objects are append-only; branch heads move only via
// compare_and_swap, so any reader resolving a branch sees exactly one
// commit's table_map.
class Catalog {
 public:
  Catalog(ObjectStore& objects, RefStore& refs, Clock clock = system_utc_clock());

  // Branch names that refuse deletion (default: "main").
  void set_protected_branches(std::set<std::string> names);

  ObjectId put_object(std::string_view bytes) { return objects_.put(bytes); }
  std::optional<std::string> get_object(const ObjectId& id) const {
    return objects_.get(id);
  }

  // Creates and persists a commit. Every snapshot in table_map must
  // resolve in the object store (DanglingSnapshot otherwise).
  Commit commit(const std::optional<ObjectId>& parent,
                std::map<std::string, TableSnapshot> table_map,
                const std::string& message, const std::string& author,
                std::optional<ObjectId> code_hash = std::nullopt);

  Commit load_commit(const ObjectId& id) const;

  BranchRef create_branch(const std::string& name, const std::string& from_ref);
  void delete_branch(const std::string& name);
  std::vector<BranchRef> list_branches() const;
  bool update_branch_cas(const std::string& name, const ObjectId& expected,
                         const ObjectId& next);

  // Three-way merge of source into target at table granularity, base =
  // lowest common ancestor. Fast-forwards when possible; a table changed
  // on both sides is a MergeConflict. Retries the CAS up to max_attempts
  // times under contention, then raises MergeContention.
  Commit merge(const std::string& source_ref, const std::string& target_branch,
               const std::string& author, int max_attempts = 3);

  // New commit on branch whose table_map equals the (ancestor) target
  // commit's. History is preserved, never rewritten.
  Commit revert(const std::string& branch, const ObjectId& commit_id,
                const std::string& author);

  TableDiffSet diff(const std::string& ref_a, const std::string& ref_b) const;

  // Branch name or full 64-hex commit id.
  ObjectId resolve_ref(const std::string& ref) const;
  std::vector<std::string> list_tables(const std::string& ref) const;
  // First-parent chain from the branch head down to the root, head first.
  std::vector<Commit> log(const std::string& branch) const;

  bool is_ancestor(const ObjectId& maybe_ancestor, const ObjectId& descendant) const;

 private:
  std::optional<ObjectId> lowest_common_ancestor(const ObjectId& a,
                                                 const ObjectId& b) const;
  void require_snapshots_resolve(const std::map<std::string, TableSnapshot>& m) const;

  ObjectStore& objects_;
  RefStore& refs_;
  Clock clock_;
  std::set<std::string> protected_branches_{"main"};
};

TableDiffSet diff_table_maps(const std::map<std::string, TableSnapshot>& from,
                             const std::map<std::string, TableSnapshot>& to);

}  // namespace minilake
