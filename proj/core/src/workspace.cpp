#include "minilake/workspace.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "minilake/codec.hpp"
#include "minilake/fs_util.hpp"
#include "minilake/pipeline.hpp"

namespace fs = std::filesystem;

namespace minilake {

namespace {

// Serializes run-counter bumps within one process; cross-process runs
// are out of scope at this scale (same stance as FsRefStore).
std::mutex g_counter_mu;

}  // namespace

bool valid_table_name(const std::string& name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') {
    return false;
  }
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

Workspace::Workspace(fs::path root, Clock clock)
    : root_(std::move(root)), clock_(std::move(clock)) {
  objects_ = std::make_unique<FsObjectStore>(root_ / "objects");
  refs_ = std::make_unique<FsRefStore>(root_ / "refs.json");
  catalog_ = std::make_unique<Catalog>(*objects_, *refs_, clock_);
  governance_ = std::make_unique<Governance>(
      *catalog_, root_ / "keys.json", root_ / "verifiers.json",
      root_ / "gate_audit.jsonl", clock_);
}

bool Workspace::is_initialized(const fs::path& root) {
  return fs::exists(root / "refs.json");
}

Workspace Workspace::init(const fs::path& root, Clock clock) {
  if (is_initialized(root)) {
    raise(Errc::WorkspaceError,
          "workspace already initialized: " + root.string());
  }
  fs::create_directories(root / "objects");
  fs::create_directories(root / "runs");
  fs::create_directories(root / "projects");
  fs::create_directories(root / "episodes");

  Workspace ws(root, std::move(clock));
  Commit genesis = ws.catalog_->commit(std::nullopt, {}, "initialize workspace",
                                       "system");
  ws.refs_->create("main", genesis.id);
  write_file_atomic(root / "run_counter", "1\n");
  return ws;
}

Workspace Workspace::open(const fs::path& root, Clock clock) {
  if (!is_initialized(root)) {
    raise(Errc::WorkspaceError, "not a workspace: " + root.string());
  }
  return Workspace(root, std::move(clock));
}

bool Workspace::has_registry() const { return fs::exists(registry_file()); }

PackageRegistry Workspace::load_registry() const {
  if (!has_registry()) return PackageRegistry{};  // empty registry
  return PackageRegistry::load(registry_file());
}

void Workspace::save_registry(const PackageRegistry& registry) {
  write_json_file_atomic(registry_file(), registry.to_json());
}

std::optional<std::set<std::string>> Workspace::load_whitelist() const {
  if (!fs::exists(whitelist_file())) return std::nullopt;
  nlohmann::json doc = read_json_file(whitelist_file());
  std::set<std::string> packages;
  for (const auto& p : doc.at("packages")) {
    packages.insert(p.get<std::string>());
  }
  return packages;
}

void Workspace::save_whitelist(const std::set<std::string>& packages) {
  write_json_file_atomic(whitelist_file(),
                         nlohmann::json{{"packages", packages}});
}

std::string Workspace::next_run_id() {
  std::lock_guard<std::mutex> lock(g_counter_mu);
  fs::path counter = root_ / "run_counter";
  int64_t next = 1;
  if (fs::exists(counter)) {
    next = std::stoll(read_file(counter));
  }
  write_file_atomic(counter, std::to_string(next + 1) + "\n");
  std::string id = std::to_string(next);
  while (id.size() < 4) id.insert(id.begin(), '0');
  return id;
}

std::string Workspace::install_project(const fs::path& source_dir) {
  PipelineSpec spec = load_project(source_dir);  // validates before copying
  fs::path dest = projects_dir() / spec.name;
  if (fs::exists(dest)) {
    raise(Errc::WorkspaceError, "project already installed: " + spec.name);
  }
  fs::create_directories(dest);
  write_file_atomic(dest / "pipeline.json", read_file(source_dir / "pipeline.json"));
  for (const auto& model : spec.models) {
    fs::path plan_dest = dest / model.plan_file;
    fs::create_directories(plan_dest.parent_path());
    write_file_atomic(plan_dest, read_file(source_dir / model.plan_file));
  }
  return spec.name;
}

bool Workspace::has_project(const std::string& name) const {
  return fs::exists(projects_dir() / name / "pipeline.json");
}

fs::path Workspace::project_dir(const std::string& name) const {
  if (!has_project(name)) {
    raise(Errc::UnknownProject, "no such project: " + name);
  }
  return projects_dir() / name;
}

std::vector<std::string> Workspace::list_projects() const {
  std::vector<std::string> names;
  if (!fs::exists(projects_dir())) return names;
  for (const auto& entry : fs::directory_iterator(projects_dir())) {
    if (entry.is_directory() && fs::exists(entry.path() / "pipeline.json")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

Commit Workspace::commit_table(const std::string& branch,
                               const std::string& table_name,
                               const Table& table, const std::string& message,
                               const std::string& author) {
  if (!valid_table_name(table_name)) {
    raise(Errc::InvalidArgument, "invalid table name: " + table_name);
  }
  table.validate();

  TableSnapshot snap;
  snap.schema_id = objects_->put(encode_schema(table.schema));
  snap.data_id = objects_->put(encode_table(table));
  snap.row_count = table.row_count;

  for (int attempt = 0; attempt < 3; ++attempt) {
    auto head = refs_->get(branch);
    if (!head) {
      raise(Errc::UnknownBranch, "no such branch: " + branch);
    }
    Commit parent = catalog_->load_commit(*head);
    auto table_map = parent.table_map;
    table_map[table_name] = snap;
    Commit next = catalog_->commit(*head, std::move(table_map), message, author);
    if (catalog_->update_branch_cas(branch, *head, next.id)) return next;
  }
  raise(Errc::MergeContention, "branch busy: " + branch);
}

}  // namespace minilake
