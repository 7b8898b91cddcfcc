#include "minilake/object_store.hpp"

#include <unistd.h>

#include <fstream>

#include "minilake/fs_util.hpp"

namespace fs = std::filesystem;

namespace minilake {

ObjectId ObjectId::from_hex(std::string_view hex) {
  if (!looks_like_hex(hex)) {
    raise(Errc::InvalidArgument,
          "not a 64-char lowercase hex object id: " + std::string(hex));
  }
  ObjectId id;
  id.hex_.assign(hex);
  return id;
}

bool ObjectId::looks_like_hex(std::string_view text) {
  if (text.size() != 64) return false;
  for (char c : text) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!ok) return false;
  }
  return true;
}

ObjectId MemoryObjectStore::put(std::string_view bytes) {
  ObjectId id = ObjectId::of_bytes(bytes);
  std::lock_guard lock(mu_);
  objects_.try_emplace(id, bytes);
  return id;
}

std::optional<std::string> MemoryObjectStore::get(const ObjectId& id) const {
  std::lock_guard lock(mu_);
  auto it = objects_.find(id);
  if (it == objects_.end()) return std::nullopt;
  return it->second;
}

bool MemoryObjectStore::contains(const ObjectId& id) const {
  std::lock_guard lock(mu_);
  return objects_.count(id) > 0;
}

uint64_t MemoryObjectStore::stored_count() const {
  std::lock_guard lock(mu_);
  return objects_.size();
}

FsObjectStore::FsObjectStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) {
    raise(Errc::StorageIo, "cannot create object dir: " + root_.string());
  }
}

fs::path FsObjectStore::path_for(const ObjectId& id) const {
  return root_ / id.hex().substr(0, 2) / id.hex();
}

ObjectId FsObjectStore::put(std::string_view bytes) {
  ObjectId id = ObjectId::of_bytes(bytes);
  fs::path target = path_for(id);
  std::lock_guard lock(mu_);
  if (fs::exists(target)) return id;  // idempotent
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) {
    raise(Errc::StorageIo, "cannot create shard dir: " + target.string());
  }
  write_file_atomic(target, bytes);
  ++stored_;
  return id;
}

std::optional<std::string> FsObjectStore::get(const ObjectId& id) const {
  fs::path target = path_for(id);
  std::error_code ec;
  if (!fs::exists(target, ec)) return std::nullopt;
  return read_file(target);
}

bool FsObjectStore::contains(const ObjectId& id) const {
  std::error_code ec;
  return fs::exists(path_for(id), ec);
}

uint64_t FsObjectStore::stored_count() const {
  std::lock_guard lock(mu_);
  return stored_;
}

void MemoryRefStore::create(const std::string& name, const ObjectId& head) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = refs_.try_emplace(name, head);
  (void)it;
  if (!inserted) {
    raise(Errc::DuplicateBranch, "branch already exists: " + name);
  }
}

void MemoryRefStore::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  if (refs_.erase(name) == 0) {
    raise(Errc::UnknownBranch, "no such branch: " + name);
  }
}

std::optional<ObjectId> MemoryRefStore::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = refs_.find(name);
  if (it == refs_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, ObjectId> MemoryRefStore::all() const {
  std::lock_guard lock(mu_);
  return refs_;
}

bool MemoryRefStore::compare_and_swap(const std::string& name,
                                      const ObjectId& expected,
                                      const ObjectId& next) {
  std::lock_guard lock(mu_);
  auto it = refs_.find(name);
  if (it == refs_.end()) {
    raise(Errc::UnknownBranch, "no such branch: " + name);
  }
  if (it->second != expected) return false;
  it->second = next;
  return true;
}

FsRefStore::FsRefStore(fs::path refs_file) : refs_file_(std::move(refs_file)) {
  if (!fs::exists(refs_file_)) {
    store_locked({});
  }
}

std::map<std::string, ObjectId> FsRefStore::load_locked() const {
  nlohmann::json doc = read_json_file(refs_file_);
  std::map<std::string, ObjectId> refs;
  for (auto& [name, hex] : doc.items()) {
    refs.emplace(name, ObjectId::from_hex(hex.get<std::string>()));
  }
  return refs;
}

void FsRefStore::store_locked(const std::map<std::string, ObjectId>& refs) const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [name, id] : refs) doc[name] = id.hex();
  write_json_file_atomic(refs_file_, doc);
}

void FsRefStore::create(const std::string& name, const ObjectId& head) {
  std::lock_guard lock(mu_);
  auto refs = load_locked();
  if (refs.count(name)) {
    raise(Errc::DuplicateBranch, "branch already exists: " + name);
  }
  refs.emplace(name, head);
  store_locked(refs);
}

void FsRefStore::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  auto refs = load_locked();
  if (refs.erase(name) == 0) {
    raise(Errc::UnknownBranch, "no such branch: " + name);
  }
  store_locked(refs);
}

std::optional<ObjectId> FsRefStore::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto refs = load_locked();
  auto it = refs.find(name);
  if (it == refs.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, ObjectId> FsRefStore::all() const {
  std::lock_guard lock(mu_);
  return load_locked();
}

bool FsRefStore::compare_and_swap(const std::string& name,
                                  const ObjectId& expected,
                                  const ObjectId& next) {
  std::lock_guard lock(mu_);
  auto refs = load_locked();
  auto it = refs.find(name);
  if (it == refs.end()) {
    raise(Errc::UnknownBranch, "no such branch: " + name);
  }
  if (it->second != expected) return false;
  it->second = next;
  store_locked(refs);
  return true;
}

}  // namespace minilake
