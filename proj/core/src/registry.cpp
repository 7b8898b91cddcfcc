#include "minilake/registry.hpp"

#include <algorithm>
#include <charconv>

#include "minilake/fs_util.hpp"

namespace minilake {

namespace {

[[noreturn]] void bad_registry(const std::string& what) {
  raise(Errc::ParseError, "registry: " + what);
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Splits "pkg@spec" conflict-side syntax.
std::pair<std::string, VersionRange> parse_side(const std::string& text) {
  size_t at = text.find('@');
  if (at == std::string::npos || at == 0) {
    bad_registry("conflict side must be pkg@version-or-range: " + text);
  }
  return {text.substr(0, at), VersionRange::parse(text.substr(at + 1))};
}

}  // namespace

Version Version::parse(const std::string& text) {
  Version v;
  v.text = text;
  if (text.empty()) bad_registry("empty version");
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t dot = text.find('.', pos);
    std::string_view part(text.data() + pos,
                          (dot == std::string::npos ? text.size() : dot) - pos);
    int64_t value = 0;
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || end != part.data() + part.size() || part.empty() ||
        value < 0) {
      bad_registry("version component is not numeric: '" + text + "'");
    }
    v.parts.push_back(value);
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return v;
}

int compare_versions(const Version& a, const Version& b) {
  size_t n = std::max(a.parts.size(), b.parts.size());
  for (size_t i = 0; i < n; ++i) {
    int64_t av = i < a.parts.size() ? a.parts[i] : 0;  // missing = 0
    int64_t bv = i < b.parts.size() ? b.parts[i] : 0;
    if (av != bv) return av < bv ? -1 : 1;
  }
  return 0;
}

int compare_versions(const std::string& a, const std::string& b) {
  return compare_versions(Version::parse(a), Version::parse(b));
}

VersionRange VersionRange::parse(const std::string& text) {
  VersionRange r;
  r.text_ = text;
  std::string t = trim(text);
  if (t.empty() || t == "*") return r;  // matches everything
  size_t pos = 0;
  while (pos <= t.size()) {
    size_t comma = t.find(',', pos);
    std::string item =
        trim(std::string_view(t).substr(pos, (comma == std::string::npos ? t.size() : comma) - pos));
    if (item.empty()) bad_registry("empty constraint in range: '" + text + "'");
    Op op = Op::Eq;
    if (item.rfind("==", 0) == 0) {
      item = trim(std::string_view(item).substr(2));
    } else if (item.rfind(">=", 0) == 0) {
      op = Op::Ge;
      item = trim(std::string_view(item).substr(2));
    } else if (item.rfind('<', 0) == 0) {
      op = Op::Lt;
      item = trim(std::string_view(item).substr(1));
    }
    // Anything left must be a bare version (an implicit ==).
    r.constraints_.push_back({op, Version::parse(item)});
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return r;
}

bool VersionRange::contains(const std::string& version) const {
  Version v = Version::parse(version);
  for (const auto& c : constraints_) {
    int cmp = compare_versions(v, c.version);
    bool ok = false;
    switch (c.op) {
      case Op::Eq: ok = cmp == 0; break;
      case Op::Ge: ok = cmp >= 0; break;
      case Op::Lt: ok = cmp < 0; break;
    }
    if (!ok) return false;
  }
  return true;
}

PackageRegistry PackageRegistry::from_json(const nlohmann::json& doc) {
  PackageRegistry reg;
  if (!doc.is_object()) bad_registry("top level must be an object");
  if (doc.contains("packages")) {
    for (auto& [name, info] : doc.at("packages").items()) {
      PackageInfo pkg;
      for (const auto& v : info.at("versions")) {
        std::string ver = v.get<std::string>();
        Version::parse(ver);  // syntax check
        pkg.versions.push_back(ver);
      }
      pkg.latest = info.at("latest").get<std::string>();
      if (std::find(pkg.versions.begin(), pkg.versions.end(), pkg.latest) ==
          pkg.versions.end()) {
        bad_registry("latest " + pkg.latest + " not in versions of " + name);
      }
      reg.packages_.emplace(name, std::move(pkg));
    }
  }
  if (doc.contains("dependencies")) {
    for (auto& [key, deps] : doc.at("dependencies").items()) {
      size_t at = key.find('@');
      if (at == std::string::npos) {
        bad_registry("dependency key must be pkg@ver: " + key);
      }
      if (!reg.has_version(key.substr(0, at), key.substr(at + 1))) {
        bad_registry("dependency key names unknown version: " + key);
      }
      std::vector<Dependency> list;
      for (const auto& d : deps) {
        list.push_back({d.at("pkg").get<std::string>(),
                        VersionRange::parse(d.at("range").get<std::string>())});
      }
      reg.dependencies_.emplace(key, std::move(list));
    }
  }
  if (doc.contains("conflicts")) {
    for (const auto& c : doc.at("conflicts")) {
      auto [a_pkg, a_range] = parse_side(c.at("a").get<std::string>());
      auto [b_pkg, b_range] = parse_side(c.at("b").get<std::string>());
      reg.conflicts_.push_back({std::move(a_pkg), std::move(a_range),
                                std::move(b_pkg), std::move(b_range),
                                c.at("message").get<std::string>()});
    }
  }
  return reg;
}

PackageRegistry PackageRegistry::load(const std::filesystem::path& file) {
  return from_json(read_json_file(file));
}

nlohmann::json PackageRegistry::to_json() const {
  nlohmann::json packages = nlohmann::json::object();
  for (const auto& [name, info] : packages_) {
    packages[name] = {{"versions", info.versions}, {"latest", info.latest}};
  }
  nlohmann::json dependencies = nlohmann::json::object();
  for (const auto& [key, deps] : dependencies_) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& d : deps) {
      list.push_back({{"pkg", d.package}, {"range", d.range.text()}});
    }
    dependencies[key] = std::move(list);
  }
  nlohmann::json conflicts = nlohmann::json::array();
  for (const auto& c : conflicts_) {
    conflicts.push_back({{"a", c.a_package + "@" + c.a_range.text()},
                         {"b", c.b_package + "@" + c.b_range.text()},
                         {"message", c.message}});
  }
  return {{"packages", std::move(packages)},
          {"dependencies", std::move(dependencies)},
          {"conflicts", std::move(conflicts)}};
}

const PackageInfo* PackageRegistry::find(const std::string& package) const {
  auto it = packages_.find(package);
  return it == packages_.end() ? nullptr : &it->second;
}

bool PackageRegistry::has_version(const std::string& package,
                                  const std::string& version) const {
  const PackageInfo* info = find(package);
  return info && std::find(info->versions.begin(), info->versions.end(),
                           version) != info->versions.end();
}

std::vector<Dependency> PackageRegistry::dependencies_of(
    const std::string& package, const std::string& version) const {
  auto it = dependencies_.find(package + "@" + version);
  return it == dependencies_.end() ? std::vector<Dependency>{} : it->second;
}

std::optional<std::string> PackageRegistry::latest_satisfying(
    const std::string& package, const VersionRange& range) const {
  const PackageInfo* info = find(package);
  if (!info) return std::nullopt;
  if (range.contains(info->latest)) return info->latest;
  std::optional<std::string> best;
  for (const auto& v : info->versions) {
    if (!range.contains(v)) continue;
    if (!best || compare_versions(v, *best) > 0) best = v;
  }
  return best;
}

std::optional<std::string> PackageRegistry::greatest_outside(
    const std::string& package, const VersionRange& range) const {
  const PackageInfo* info = find(package);
  if (!info) return std::nullopt;
  std::optional<std::string> best;
  for (const auto& v : info->versions) {
    if (range.contains(v)) continue;
    if (!best || compare_versions(v, *best) > 0) best = v;
  }
  return best;
}

ResolvedEnv resolve_env(const EnvSpec& env, const PackageRegistry& registry) {
  ResolvedEnv out;
  out.runtime_version = env.runtime_version;

  std::vector<std::string> worklist;
  for (const auto& [pkg, ver] : env.pins) {  // name order: deterministic
    if (!registry.find(pkg)) {
      raise(Errc::UnknownPackage, "no such package: " + pkg);
    }
    if (!registry.has_version(pkg, ver)) {
      raise(Errc::UnknownVersion, pkg + " has no version " + ver);
    }
    out.installed[pkg] = ver;
    out.provenance[pkg] = Provenance::Pinned;
    worklist.push_back(pkg);
  }

  // Single pass, growing through transitives; chosen versions are final.
  for (size_t i = 0; i < worklist.size(); ++i) {
    const std::string& pkg = worklist[i];
    for (const auto& dep : registry.dependencies_of(pkg, out.installed[pkg])) {
      auto installed = out.installed.find(dep.package);
      if (installed != out.installed.end()) {
        if (!dep.range.contains(installed->second)) {
          raise(Errc::Unsatisfiable,
                pkg + " requires " + dep.package + " " + dep.range.text() +
                    " but " + installed->second + " is installed");
        }
        continue;
      }
      auto candidate = registry.latest_satisfying(dep.package, dep.range);
      if (!candidate) {
        if (!registry.find(dep.package)) {
          raise(Errc::UnknownPackage,
                pkg + " depends on unknown package " + dep.package);
        }
        raise(Errc::Unsatisfiable, "no version of " + dep.package +
                                       " satisfies " + dep.range.text() +
                                       " (required by " + pkg + ")");
      }
      out.installed[dep.package] = *candidate;
      out.provenance[dep.package] = Provenance::Transitive;
      worklist.push_back(dep.package);
    }
  }
  return out;
}

}  // namespace minilake
