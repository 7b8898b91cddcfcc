#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minilake/error.hpp"
#include "minilake/sha256.hpp"

namespace minilake {

// Content address: lowercase hex of a SHA-256 over canonical bytes.
class ObjectId {
 public:
  ObjectId() = default;

  static ObjectId from_hex(std::string_view hex);
  static ObjectId of_bytes(std::string_view bytes) {
    ObjectId id;
    id.hex_ = sha256_hex(bytes);
    return id;
  }
  static bool looks_like_hex(std::string_view text);

  const std::string& hex() const { return hex_; }
  std::string short_hex() const { return hex_.substr(0, 12); }
  bool empty() const { return hex_.empty(); }

  auto operator<=>(const ObjectId&) const = default;

 private:
  std::string hex_;
};

// Write-once, read-many blob storage. Implementations must be safe for
// concurrent puts and gets; put of identical bytes is idempotent.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual ObjectId put(std::string_view bytes) = 0;
  virtual std::optional<std::string> get(const ObjectId& id) const = 0;
  virtual bool contains(const ObjectId& id) const = 0;
  // Number of put calls that stored a new object (diagnostic, used by
  // purity assertions in tests).
  virtual uint64_t stored_count() const = 0;
};

class MemoryObjectStore final : public ObjectStore {
 public:
  ObjectId put(std::string_view bytes) override;
  std::optional<std::string> get(const ObjectId& id) const override;
  bool contains(const ObjectId& id) const override;
  uint64_t stored_count() const override;

 private:
  mutable std::mutex mu_;
  std::map<ObjectId, std::string> objects_;
};

// Directory layout: objects/<first2>/<hex>. Files are written via a temp
// name and rename so a concurrent reader never sees a partial object.
class FsObjectStore final : public ObjectStore {
 public:
  explicit FsObjectStore(std::filesystem::path root);

  ObjectId put(std::string_view bytes) override;
  std::optional<std::string> get(const ObjectId& id) const override;
  bool contains(const ObjectId& id) const override;
  uint64_t stored_count() const override;

 private:
  std::filesystem::path path_for(const ObjectId& id) const;
  std::filesystem::path root_;
  mutable std::mutex mu_;
  uint64_t stored_ = 0;
};

// Named branch heads with compare-and-swap as the only update primitive.
class RefStore {
 public:
  virtual ~RefStore() = default;

  virtual void create(const std::string& name, const ObjectId& head) = 0;
  virtual void remove(const std::string& name) = 0;
  virtual std::optional<ObjectId> get(const std::string& name) const = 0;
  virtual std::map<std::string, ObjectId> all() const = 0;
  // Atomically sets name -> next iff the current head equals expected.
  // Returns false (and leaves the head alone) on a stale expected value.
  virtual bool compare_and_swap(const std::string& name,
                                const ObjectId& expected,
                                const ObjectId& next) = 0;
};

class MemoryRefStore final : public RefStore {
 public:
  void create(const std::string& name, const ObjectId& head) override;
  void remove(const std::string& name) override;
  std::optional<ObjectId> get(const std::string& name) const override;
  std::map<std::string, ObjectId> all() const override;
  bool compare_and_swap(const std::string& name, const ObjectId& expected,
                        const ObjectId& next) override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ObjectId> refs_;
};

// Single refs.json file, replaced wholesale by atomic rename on every
// update. CAS serializes through a process-wide mutex; cross-process
// writers are out of scope at this scale.
class FsRefStore final : public RefStore {
 public:
  explicit FsRefStore(std::filesystem::path refs_file);

  void create(const std::string& name, const ObjectId& head) override;
  void remove(const std::string& name) override;
  std::optional<ObjectId> get(const std::string& name) const override;
  std::map<std::string, ObjectId> all() const override;
  bool compare_and_swap(const std::string& name, const ObjectId& expected,
                        const ObjectId& next) override;

 private:
  std::map<std::string, ObjectId> load_locked() const;
  void store_locked(const std::map<std::string, ObjectId>& refs) const;

  std::filesystem::path refs_file_;
  mutable std::mutex mu_;
};

}  // namespace minilake
