#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "minilake/error.hpp"
#include "json.hpp"
#include "minilake/pipeline.hpp"

namespace minilake {

// Dotted numeric version, compared component-wise with missing
// components treated as 0 ("2.0" == "2.0.0" < "2.0.1").
struct Version {
  std::string text;
  std::vector<int64_t> parts;

  static Version parse(const std::string& text);
};

int compare_versions(const Version& a, const Version& b);
int compare_versions(const std::string& a, const std::string& b);

// Conjunction of ==v / >=v / <v constraints, comma-separated. "*" or the
// empty string matches everything; a bare version means ==version.
class VersionRange {
 public:
  static VersionRange parse(const std::string& text);

  bool contains(const std::string& version) const;
  const std::string& text() const { return text_; }

 private:
  enum class Op { Eq, Ge, Lt };
  struct Constraint {
    Op op;
    Version version;
  };
  std::string text_;
  std::vector<Constraint> constraints_;
};

struct PackageInfo {
  std::vector<std::string> versions;  // as listed in the registry file
  std::string latest;
};

struct Dependency {
  std::string package;
  VersionRange range;
};

// One "these two installs cannot coexist" rule. Sides are written
// "pkg@version-or-range" in the registry file.
struct ConflictRule {
  std::string a_package;
  VersionRange a_range;
  std::string b_package;
  VersionRange b_range;
  std::string message;
};

enum class Provenance { Pinned, Transitive };

struct ResolvedEnv {
  std::string runtime_version;
  std::map<std::string, std::string> installed;   // package -> exact version
  std::map<std::string, Provenance> provenance;  // parallel to installed
};

// In-memory image of registry.json. Immutable once loaded.
class PackageRegistry {
 public:
  static PackageRegistry from_json(const nlohmann::json& doc);
  static PackageRegistry load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  const PackageInfo* find(const std::string& package) const;
  bool has_version(const std::string& package, const std::string& version) const;
  std::vector<Dependency> dependencies_of(const std::string& package,
                                          const std::string& version) const;
  const std::vector<ConflictRule>& conflicts() const { return conflicts_; }
  const std::map<std::string, PackageInfo>& packages() const { return packages_; }

  // Resolver candidate for an unpinned dependency: the `latest` entry if
  // it satisfies the range, else the greatest listed version that does.
  std::optional<std::string> latest_satisfying(const std::string& package,
                                               const VersionRange& range) const;
  // Repair-policy helper: greatest listed version outside the range.
  std::optional<std::string> greatest_outside(const std::string& package,
                                              const VersionRange& range) const;

 private:
  std::map<std::string, PackageInfo> packages_;
  std::map<std::string, std::vector<Dependency>> dependencies_;  // "pkg@ver"
  std::vector<ConflictRule> conflicts_;
};

// Installs pins at their exact versions, then walks the installed set
// once (no backtracking), installing each unpinned dependency at the
// registry latest satisfying its range. An already-installed package
// whose version falls outside a declared range is Unsatisfiable.
ResolvedEnv resolve_env(const EnvSpec& env, const PackageRegistry& registry);

}  // namespace minilake
