#include "minilake/pipeline.hpp"

#include <algorithm>
#include <set>

#include "minilake/fs_util.hpp"
#include "minilake/plan_parser.hpp"

namespace fs = std::filesystem;

namespace minilake {

namespace {

[[noreturn]] void manifest_fail(const std::string& what) {
  raise(Errc::ManifestError, what);
}

std::string normalize_rel_path(std::string path) {
  std::replace(path.begin(), path.end(), '\\', '/');
  return path;
}

EnvSpec parse_env(const nlohmann::json& j, const std::string& model) {
  if (!j.is_object()) manifest_fail("model '" + model + "': env must be an object");
  EnvSpec env;
  env.runtime_version = j.value("runtime", "");
  if (env.runtime_version.empty()) {
    manifest_fail("model '" + model + "': env.runtime must be non-empty");
  }
  if (j.contains("pins")) {
    if (!j["pins"].is_object()) {
      manifest_fail("model '" + model + "': env.pins must be an object");
    }
    for (auto& [pkg, ver] : j["pins"].items()) {
      if (pkg.empty() || !ver.is_string() || ver.get<std::string>().empty()) {
        manifest_fail("model '" + model + "': bad pin for '" + pkg + "'");
      }
      for (char c : pkg) {
        if (c >= 'A' && c <= 'Z') {
          manifest_fail("model '" + model + "': package names are lowercase: " + pkg);
        }
      }
      env.pins[pkg] = ver.get<std::string>();
    }
  }
  return env;
}

}  // namespace

const ModelNode* PipelineSpec::find_model(const std::string& model_name) const {
  for (const auto& m : models) {
    if (m.name == model_name) return &m;
  }
  return nullptr;
}

PipelineSpec load_project(const fs::path& dir) {
  fs::path manifest_path = dir / "pipeline.json";
  if (!fs::exists(manifest_path)) {
    manifest_fail("no pipeline.json in " + dir.string());
  }
  nlohmann::json doc = read_json_file(manifest_path);
  if (!doc.is_object()) manifest_fail("pipeline.json must be a JSON object");

  PipelineSpec spec;
  spec.project_dir = dir;
  spec.name = doc.value("name", "");
  if (spec.name.empty()) manifest_fail("pipeline.json: 'name' must be non-empty");
  if (!doc.contains("models") || !doc["models"].is_array() || doc["models"].empty()) {
    manifest_fail("pipeline.json: 'models' must be a non-empty array");
  }

  std::set<std::string> names;
  for (const auto& m : doc["models"]) {
    ModelNode node;
    node.name = m.value("name", "");
    if (node.name.empty()) manifest_fail("model with empty name");
    if (!names.insert(node.name).second) {
      manifest_fail("duplicate model name: " + node.name);
    }
    if (!m.contains("inputs") || !m["inputs"].is_array() || m["inputs"].empty()) {
      manifest_fail("model '" + node.name + "': inputs must be a non-empty array");
    }
    for (const auto& input : m["inputs"]) {
      node.inputs.push_back(input.get<std::string>());
    }
    node.plan_file = normalize_rel_path(m.value("plan", ""));
    if (node.plan_file.empty()) {
      manifest_fail("model '" + node.name + "': missing plan file path");
    }
    fs::path plan_path = dir / node.plan_file;
    if (!fs::exists(plan_path)) {
      manifest_fail("model '" + node.name + "': plan file not found: " +
                    plan_path.string());
    }
    std::string plan_text = read_file(plan_path);
    try {
      node.plan = parse_plan(plan_text);
    } catch (const Error& e) {
      raise(Errc::SyntaxError,
            node.plan_file + ": " + e.what() + " (model '" + node.name + "')");
    }
    std::string mat = m.value("materialization", "REPLACE");
    if (mat == "REPLACE") {
      node.materialization = Materialization::Replace;
    } else if (mat == "NONE") {
      node.materialization = Materialization::None;
    } else {
      manifest_fail("model '" + node.name + "': unknown materialization: " + mat);
    }
    if (!m.contains("env")) manifest_fail("model '" + node.name + "': missing env");
    node.env = parse_env(m["env"], node.name);
    spec.models.push_back(std::move(node));
  }

  // Plan inputs must be declared on the node.
  for (const auto& model : spec.models) {
    for (const auto& ref : model.plan.input_names()) {
      if (std::find(model.inputs.begin(), model.inputs.end(), ref) ==
          model.inputs.end()) {
        manifest_fail("model '" + model.name + "': plan references '" + ref +
                      "' which is not in its inputs");
      }
    }
  }
  return spec;
}

std::vector<ModelNode> build_dag(const PipelineSpec& spec) {
  std::map<std::string, const ModelNode*> by_name;
  for (const auto& m : spec.models) by_name.emplace(m.name, &m);

  // Edges between models only; everything else is a source table.
  std::map<std::string, std::set<std::string>> deps;
  for (const auto& m : spec.models) {
    auto& d = deps[m.name];
    for (const auto& input : m.inputs) {
      if (by_name.count(input)) d.insert(input);
    }
  }

  std::vector<ModelNode> order;
  std::set<std::string> emitted;
  while (order.size() < spec.models.size()) {
    // deps is name-sorted, so the first ready node is the tie-break winner.
    std::string ready;
    for (const auto& [name, d] : deps) {
      if (emitted.count(name)) continue;
      bool ok = true;
      for (const auto& dep : d) ok = ok && emitted.count(dep) > 0;
      if (ok) {
        ready = name;
        break;
      }
    }
    if (ready.empty()) {
      // Walk unemitted edges until a name repeats to report the cycle.
      std::vector<std::string> trail;
      std::set<std::string> on_trail;
      std::string cur;
      for (const auto& [name, d] : deps) {
        if (!emitted.count(name)) {
          cur = name;
          break;
        }
      }
      while (!on_trail.count(cur)) {
        trail.push_back(cur);
        on_trail.insert(cur);
        for (const auto& dep : deps[cur]) {
          if (!emitted.count(dep)) {
            cur = dep;
            break;
          }
        }
      }
      trail.push_back(cur);
      auto start = std::find(trail.begin(), trail.end(), cur);
      std::string msg = "model dependency cycle: ";
      for (auto it = start; it != trail.end(); ++it) {
        if (it != start) msg += " -> ";
        msg += *it;
      }
      raise(Errc::CycleError, msg);
    }
    order.push_back(*by_name.at(ready));
    emitted.insert(ready);
  }
  return order;
}

ObjectId code_hash(const PipelineSpec& spec) {
  // Canonical serialization: sorted relative path -> raw file bytes.
  nlohmann::json files = nlohmann::json::object();
  files["pipeline.json"] = read_file(spec.project_dir / "pipeline.json");
  for (const auto& model : spec.models) {
    files[model.plan_file] = read_file(spec.project_dir / model.plan_file);
  }
  nlohmann::json doc;
  doc["files"] = files;
  return ObjectId::of_bytes(doc.dump());
}

}  // namespace minilake
