#include "minilake/catalog.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <unordered_set>

#include "json.hpp"

namespace minilake {

namespace {

nlohmann::json snapshot_to_json(const TableSnapshot& snap) {
  return {{"data_id", snap.data_id.hex()},
          {"row_count", snap.row_count},
          {"schema_id", snap.schema_id.hex()}};
}

TableSnapshot snapshot_from_json(const nlohmann::json& j) {
  TableSnapshot snap;
  snap.data_id = ObjectId::from_hex(j.at("data_id").get<std::string>());
  snap.schema_id = ObjectId::from_hex(j.at("schema_id").get<std::string>());
  snap.row_count = j.at("row_count").get<uint64_t>();
  return snap;
}

}  // namespace

Clock system_utc_clock() {
  return [] {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
  };
}

bool valid_branch_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '/' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string Commit::canonical_encoding() const {
  // nlohmann object keys are kept in sorted order, dump() emits no
  // whitespace: exactly the canonical form the id is defined over.
  nlohmann::json doc;
  doc["author"] = author;
  doc["code_hash"] = code_hash ? nlohmann::json(code_hash->hex()) : nlohmann::json();
  doc["message"] = message;
  nlohmann::json parent_ids = nlohmann::json::array();
  for (const auto& p : parents) parent_ids.push_back(p.hex());
  doc["parents"] = parent_ids;
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& [name, snap] : table_map) tables[name] = snapshot_to_json(snap);
  doc["table_map"] = tables;
  doc["timestamp"] = timestamp;
  return doc.dump();
}

Catalog::Catalog(ObjectStore& objects, RefStore& refs, Clock clock)
    : objects_(objects), refs_(refs), clock_(std::move(clock)) {}

void Catalog::set_protected_branches(std::set<std::string> names) {
  protected_branches_ = std::move(names);
}

void Catalog::require_snapshots_resolve(
    const std::map<std::string, TableSnapshot>& m) const {
  for (const auto& [name, snap] : m) {
    if (!objects_.contains(snap.schema_id) || !objects_.contains(snap.data_id)) {
      raise(Errc::DanglingSnapshot, "snapshot for table '" + name +
                                        "' references missing objects");
    }
  }
}

Commit Catalog::commit(const std::optional<ObjectId>& parent,
                       std::map<std::string, TableSnapshot> table_map,
                       const std::string& message, const std::string& author,
                       std::optional<ObjectId> code_hash) {
  require_snapshots_resolve(table_map);
  Commit c;
  if (parent) {
    if (!objects_.contains(*parent)) {
      raise(Errc::UnknownRef, "parent commit not found: " + parent->hex());
    }
    c.parents.push_back(*parent);
  }
  c.table_map = std::move(table_map);
  c.message = message;
  c.author = author;
  c.timestamp = clock_();
  c.code_hash = std::move(code_hash);
  std::string bytes = c.canonical_encoding();
  c.id = objects_.put(bytes);
  return c;
}

Commit Catalog::load_commit(const ObjectId& id) const {
  auto bytes = objects_.get(id);
  if (!bytes) {
    raise(Errc::UnknownRef, "commit not found: " + id.hex());
  }
  nlohmann::json doc = nlohmann::json::parse(*bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::CorruptData, "object is not a commit: " + id.hex());
  }
  Commit c;
  c.id = id;
  c.author = doc.at("author").get<std::string>();
  c.message = doc.at("message").get<std::string>();
  c.timestamp = doc.at("timestamp").get<int64_t>();
  if (!doc.at("code_hash").is_null()) {
    c.code_hash = ObjectId::from_hex(doc.at("code_hash").get<std::string>());
  }
  for (const auto& p : doc.at("parents")) {
    c.parents.push_back(ObjectId::from_hex(p.get<std::string>()));
  }
  for (auto& [name, snap] : doc.at("table_map").items()) {
    c.table_map.emplace(name, snapshot_from_json(snap));
  }
  return c;
}

BranchRef Catalog::create_branch(const std::string& name,
                                 const std::string& from_ref) {
  if (!valid_branch_name(name)) {
    raise(Errc::InvalidArgument, "invalid branch name: " + name);
  }
  ObjectId head = resolve_ref(from_ref);
  refs_.create(name, head);  // copy-on-write: no data moves
  return BranchRef{name, head};
}

void Catalog::delete_branch(const std::string& name) {
  if (protected_branches_.count(name)) {
    raise(Errc::ProtectedBranch, "branch is protected: " + name);
  }
  refs_.remove(name);
}

std::vector<BranchRef> Catalog::list_branches() const {
  std::vector<BranchRef> out;
  for (const auto& [name, head] : refs_.all()) out.push_back({name, head});
  return out;
}

bool Catalog::update_branch_cas(const std::string& name, const ObjectId& expected,
                                const ObjectId& next) {
  return refs_.compare_and_swap(name, expected, next);
}

ObjectId Catalog::resolve_ref(const std::string& ref) const {
  if (auto head = refs_.get(ref)) return *head;
  if (ObjectId::looks_like_hex(ref)) {
    ObjectId id = ObjectId::from_hex(ref);
    if (objects_.contains(id)) return id;
  }
  raise(Errc::UnknownRef, "cannot resolve ref: " + ref);
}

bool Catalog::is_ancestor(const ObjectId& maybe_ancestor,
                          const ObjectId& descendant) const {
  std::deque<ObjectId> queue{descendant};
  std::unordered_set<std::string> seen;
  while (!queue.empty()) {
    ObjectId cur = queue.front();
    queue.pop_front();
    if (cur == maybe_ancestor) return true;
    if (!seen.insert(cur.hex()).second) continue;
    for (const auto& p : load_commit(cur).parents) queue.push_back(p);
  }
  return false;
}

std::optional<ObjectId> Catalog::lowest_common_ancestor(const ObjectId& a,
                                                        const ObjectId& b) const {
  // BFS from a collecting ancestors, then BFS from b returning the first
  // hit. Histories are short at this scale.
  std::unordered_set<std::string> ancestors_of_a;
  std::deque<ObjectId> queue{a};
  while (!queue.empty()) {
    ObjectId cur = queue.front();
    queue.pop_front();
    if (!ancestors_of_a.insert(cur.hex()).second) continue;
    for (const auto& p : load_commit(cur).parents) queue.push_back(p);
  }
  std::unordered_set<std::string> seen;
  queue = {b};
  while (!queue.empty()) {
    ObjectId cur = queue.front();
    queue.pop_front();
    if (ancestors_of_a.count(cur.hex())) return cur;
    if (!seen.insert(cur.hex()).second) continue;
    for (const auto& p : load_commit(cur).parents) queue.push_back(p);
  }
  return std::nullopt;
}

Commit Catalog::merge(const std::string& source_ref,
                      const std::string& target_branch,
                      const std::string& author, int max_attempts) {
  ObjectId source_head = resolve_ref(source_ref);
  if (!refs_.get(target_branch)) {
    raise(Errc::UnknownRef, "cannot resolve ref: " + target_branch);
  }

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    ObjectId target_head = resolve_ref(target_branch);
    if (source_head == target_head || is_ancestor(source_head, target_head)) {
      return load_commit(target_head);  // already up to date
    }

    auto base = lowest_common_ancestor(source_head, target_head);
    if (!base) {
      raise(Errc::MergeConflict, "branches share no common ancestor");
    }

    if (*base == target_head) {
      // Target unchanged since the branch point: fast-forward.
      if (update_branch_cas(target_branch, target_head, source_head)) {
        return load_commit(source_head);
      }
      continue;
    }

    const Commit base_commit = load_commit(*base);
    const Commit source_commit = load_commit(source_head);
    const Commit target_commit = load_commit(target_head);

    std::map<std::string, TableSnapshot> merged = target_commit.table_map;
    std::set<std::string> names;
    for (const auto& [n, s] : base_commit.table_map) names.insert(n);
    for (const auto& [n, s] : source_commit.table_map) names.insert(n);
    for (const auto& [n, s] : target_commit.table_map) names.insert(n);

    auto lookup = [](const std::map<std::string, TableSnapshot>& m,
                     const std::string& n) -> std::optional<TableSnapshot> {
      auto it = m.find(n);
      if (it == m.end()) return std::nullopt;
      return it->second;
    };

    for (const auto& name : names) {
      auto in_base = lookup(base_commit.table_map, name);
      auto in_src = lookup(source_commit.table_map, name);
      auto in_tgt = lookup(target_commit.table_map, name);
      bool src_changed = in_src != in_base;
      bool tgt_changed = in_tgt != in_base;
      if (src_changed && tgt_changed && in_src != in_tgt) {
        raise(Errc::MergeConflict,
              "table '" + name + "' changed on both sides since the merge base");
      }
      if (src_changed) {
        if (in_src) {
          merged[name] = *in_src;
        } else {
          merged.erase(name);
        }
      }
      // Target-only changes and unchanged tables are already in `merged`.
    }

    Commit merge_commit;
    merge_commit.parents = {target_head, source_head};
    merge_commit.table_map = std::move(merged);
    merge_commit.message =
        "merge " + source_ref + " into " + target_branch;
    merge_commit.author = author;
    merge_commit.timestamp = clock_();
    std::string bytes = merge_commit.canonical_encoding();
    merge_commit.id = objects_.put(bytes);

    if (update_branch_cas(target_branch, target_head, merge_commit.id)) {
      return merge_commit;
    }
    // Someone moved the target under us; recompute against the new head.
  }
  raise(Errc::MergeContention,
        "merge into " + target_branch + " kept losing the CAS race");
}

Commit Catalog::revert(const std::string& branch, const ObjectId& commit_id,
                       const std::string& author) {
  if (!refs_.get(branch)) {
    raise(Errc::UnknownRef, "cannot resolve ref: " + branch);
  }
  for (int attempt = 0; attempt < 3; ++attempt) {
    ObjectId head = resolve_ref(branch);
    if (!is_ancestor(commit_id, head)) {
      raise(Errc::NotAnAncestor,
            commit_id.hex() + " is not an ancestor of " + branch);
    }
    Commit target = load_commit(commit_id);
    Commit c;
    c.parents = {head};
    c.table_map = target.table_map;
    c.message = "revert " + branch + " to " + commit_id.short_hex();
    c.author = author;
    c.timestamp = clock_();
    c.id = objects_.put(c.canonical_encoding());
    if (update_branch_cas(branch, head, c.id)) return c;
  }
  raise(Errc::MergeContention, "revert of " + branch + " kept losing the CAS race");
}

TableDiffSet diff_table_maps(const std::map<std::string, TableSnapshot>& from,
                             const std::map<std::string, TableSnapshot>& to) {
  TableDiffSet out;
  for (const auto& [name, snap] : to) {
    auto it = from.find(name);
    if (it == from.end()) {
      out.added.insert(name);
    } else if (it->second != snap) {
      out.changed.emplace(name, TableChange{it->second, snap});
    }
  }
  for (const auto& [name, snap] : from) {
    if (!to.count(name)) out.removed.insert(name);
  }
  return out;
}

TableDiffSet Catalog::diff(const std::string& ref_a, const std::string& ref_b) const {
  Commit a = load_commit(resolve_ref(ref_a));
  Commit b = load_commit(resolve_ref(ref_b));
  return diff_table_maps(a.table_map, b.table_map);
}

std::vector<std::string> Catalog::list_tables(const std::string& ref) const {
  Commit c = load_commit(resolve_ref(ref));
  std::vector<std::string> names;
  for (const auto& [name, snap] : c.table_map) names.push_back(name);
  return names;
}

std::vector<Commit> Catalog::log(const std::string& branch) const {
  std::vector<Commit> chain;
  ObjectId cur = resolve_ref(branch);
  while (true) {
    Commit c = load_commit(cur);
    bool at_root = c.parents.empty();
    ObjectId next = at_root ? ObjectId() : c.parents.front();
    chain.push_back(std::move(c));
    if (at_root) break;
    cur = next;
  }
  return chain;
}

}  // namespace minilake
