#include "minilake/tool_service.hpp"

#include <algorithm>
#include <cmath>

#include "minilake/codec.hpp"
#include "minilake/eval.hpp"
#include "minilake/fs_util.hpp"
#include "minilake/plan_parser.hpp"

namespace minilake {

namespace {

constexpr uint64_t kQueryRowCap = 1000;

nlohmann::json error_envelope(const nlohmann::json& id, int code,
                              const std::string& message,
                              const nlohmann::json& data = nullptr) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (!data.is_null()) err["data"] = data;
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", std::move(err)}};
}

}  // namespace

nlohmann::json cell_to_json(const CellValue& cell) {
  if (is_null(cell)) return nullptr;
  if (const auto* i = std::get_if<int64_t>(&cell)) return *i;
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "NaN";
    if (std::isinf(*d)) return *d > 0 ? "Infinity" : "-Infinity";
    return *d;
  }
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return std::get<bool>(cell);
}

nlohmann::json schema_to_json(const Schema& schema) {
  return nlohmann::json::parse(encode_schema(schema));
}

nlohmann::json ToolDescriptor::to_json() const {
  nlohmann::json properties = nlohmann::json::object();
  nlohmann::json required = nlohmann::json::array();
  for (const auto& f : fields) {
    properties[f.name] = {{"type", f.type}, {"description", f.description}};
    if (f.required) required.push_back(f.name);
  }
  return {{"name", name},
          {"description", description},
          {"category", category},
          {"input_schema",
           {{"type", "object"},
            {"properties", std::move(properties)},
            {"required", std::move(required)}}}};
}

ToolService::ToolService(Workspace& workspace)
    : ws_(workspace), engine_(workspace) {
  descriptors_ = {
      {"list_runs",
       "List pipeline runs, newest first, optionally filtered.",
       "OBSERVABILITY",
       {{"status", "string", false, "RUNNING, SUCCESS, FAILED or BLOCKED"},
        {"project", "string", false, "only runs of this project"},
        {"limit", "integer", false, "maximum number of runs returned"}}},
      {"get_run_logs",
       "Full ordered log of one run.",
       "OBSERVABILITY",
       {{"run_id", "string", true, "run identifier, e.g. 0001"}}},
      {"list_branches",
       "All branches with their head commit ids.",
       "EXPLORATION",
       {}},
      {"create_branch",
       "Create a branch at an existing ref.",
       "EXECUTION",
       {{"name", "string", true, "new branch name"},
        {"from_ref", "string", false, "branch or commit to start from (default main)"}}},
      {"list_tables",
       "Table names visible at a ref.",
       "EXPLORATION",
       {{"ref", "string", true, "branch name or commit id"}}},
      {"get_table_schema",
       "Declared schema of one table at a ref.",
       "EXPLORATION",
       {{"ref", "string", true, "branch name or commit id"},
        {"table", "string", true, "table name"}}},
      {"query_table",
       "Evaluate a plan against tables at a ref (row-capped).",
       "EXPLORATION",
       {{"ref", "string", true, "branch name or commit id"},
        {"plan", "string", true, "plan text, e.g. from(A) | limit(5)"},
        {"limit", "integer", false, "row cap, at most 1000"}}},
      {"diff_refs",
       "Tables added, removed or changed between two refs.",
       "EXPLORATION",
       {{"ref_a", "string", true, "base ref"},
        {"ref_b", "string", true, "other ref"}}},
      {"registry_info",
       "Versions, latest, dependencies and conflict rules of a package.",
       "EXPLORATION",
       {{"package", "string", true, "package name"}}},
      {"get_project",
       "Manifest of a workspace project: models, plans, envs.",
       "EXPLORATION",
       {{"project", "string", true, "project name"}}},
      {"set_model_env",
       "Replace the declared env of one model in a workspace project.",
       "EXECUTION",
       {{"project", "string", true, "project name"},
        {"model", "string", true, "model name"},
        {"env", "object", true, "{runtime?, pins?} replacement env"}}},
      {"run_pipeline",
       "Execute a project on a fresh run branch and gate-merge into the target.",
       "EXECUTION",
       {{"project", "string", true, "workspace project name"},
        {"branch", "string", true, "target branch"},
        {"no_merge", "boolean", false, "leave results on the run branch"}}},
      {"request_merge",
       "Verify-then-merge one ref into a target branch.",
       "GOVERNANCE",
       {{"source", "string", true, "source ref"},
        {"target", "string", true, "target branch"}}},
  };
}

const ToolDescriptor* ToolService::find_descriptor(const std::string& name) const {
  for (const auto& d : descriptors_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

void ToolService::validate_args(const ToolDescriptor& descriptor,
                                const nlohmann::json& args) const {
  if (!args.is_object()) {
    throw RpcFault(rpc::kInvalidParams, "arguments must be an object");
  }
  for (const auto& f : descriptor.fields) {
    if (!args.contains(f.name)) {
      if (f.required) {
        throw RpcFault(rpc::kInvalidParams,
                       descriptor.name + ": missing argument '" + f.name + "'");
      }
      continue;
    }
    const auto& v = args.at(f.name);
    bool ok = (f.type == "string" && v.is_string()) ||
              (f.type == "integer" && v.is_number_integer()) ||
              (f.type == "boolean" && v.is_boolean()) ||
              (f.type == "object" && v.is_object());
    if (!ok) {
      throw RpcFault(rpc::kInvalidParams, descriptor.name + ": argument '" +
                                              f.name + "' must be " + f.type);
    }
  }
  for (auto it = args.begin(); it != args.end(); ++it) {
    bool known = std::any_of(
        descriptor.fields.begin(), descriptor.fields.end(),
        [&](const ToolField& f) { return f.name == it.key(); });
    if (!known) {
      throw RpcFault(rpc::kInvalidParams, descriptor.name +
                                              ": unexpected argument '" +
                                              it.key() + "'");
    }
  }
}

void ToolService::require_read(const Principal& principal) const {
  Decision d = authorize(principal, {ActionKind::Read, ""});
  if (!d.allowed) {
    throw RpcFault(rpc::kDomainError, d.reason,
                   {{"kind", "PermissionDenied"}});
  }
}

nlohmann::json ToolService::call_tool(const std::string& name,
                                      const nlohmann::json& args,
                                      const Principal& principal) {
  const ToolDescriptor* descriptor = find_descriptor(name);
  if (!descriptor) {
    throw RpcFault(rpc::kInvalidParams, "unknown tool: " + name);
  }
  validate_args(*descriptor, args);

  try {
    if (name == "list_runs") return tool_list_runs(args, principal);
    if (name == "get_run_logs") return tool_get_run_logs(args, principal);
    if (name == "list_branches") return tool_list_branches(args, principal);
    if (name == "create_branch") return tool_create_branch(args, principal);
    if (name == "list_tables") return tool_list_tables(args, principal);
    if (name == "get_table_schema") return tool_get_table_schema(args, principal);
    if (name == "query_table") return tool_query_table(args, principal);
    if (name == "diff_refs") return tool_diff_refs(args, principal);
    if (name == "registry_info") return tool_registry_info(args, principal);
    if (name == "get_project") return tool_get_project(args, principal);
    if (name == "set_model_env") return tool_set_model_env(args, principal);
    if (name == "run_pipeline") return tool_run_pipeline(args, principal);
    if (name == "request_merge") return tool_request_merge(args, principal);
  } catch (const RpcFault&) {
    throw;
  } catch (const Error& e) {
    throw RpcFault(rpc::kDomainError, e.what(), {{"kind", e.kind()}});
  }
  throw RpcFault(rpc::kInvalidParams, "unknown tool: " + name);
}

nlohmann::json ToolService::handle_rpc(const nlohmann::json& request,
                                       const std::optional<std::string>& api_key) {
  nlohmann::json id = nullptr;
  if (request.is_object() && request.contains("id")) id = request.at("id");

  if (!request.is_object() || !request.contains("method") ||
      !request.at("method").is_string()) {
    return error_envelope(id, rpc::kParseError, "invalid request envelope");
  }
  std::string method = request.at("method").get<std::string>();

  Principal principal;
  if (!api_key) {
    return error_envelope(id, rpc::kAuthFailed, "missing X-API-Key header",
                          {{"kind", "AuthFailed"}});
  }
  try {
    principal = ws_.governance().authenticate(*api_key);
  } catch (const Error& e) {
    return error_envelope(id, rpc::kAuthFailed, e.what(),
                          {{"kind", e.kind()}});
  }

  if (method == "tools/list") {
    nlohmann::json tools = nlohmann::json::array();
    for (const auto& d : descriptors_) tools.push_back(d.to_json());
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", {{"tools", tools}}}};
  }
  if (method != "tools/call") {
    return error_envelope(id, rpc::kMethodNotFound, "unknown method: " + method);
  }

  const nlohmann::json* params = nullptr;
  if (request.contains("params")) params = &request.at("params");
  if (!params || !params->is_object() || !params->contains("name") ||
      !params->at("name").is_string()) {
    return error_envelope(id, rpc::kInvalidParams,
                          "tools/call needs params.name and params.arguments");
  }
  nlohmann::json args = nlohmann::json::object();
  if (params->contains("arguments")) args = params->at("arguments");

  try {
    nlohmann::json result =
        call_tool(params->at("name").get<std::string>(), args, principal);
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
  } catch (const RpcFault& fault) {
    return error_envelope(id, fault.code(), fault.what(), fault.data());
  }
}

std::string ToolService::handle_body(const std::string& body,
                                     const std::optional<std::string>& api_key) {
  nlohmann::json request = nlohmann::json::parse(body, nullptr, false);
  if (request.is_discarded()) {
    return error_envelope(nullptr, rpc::kParseError, "parse error").dump();
  }
  return handle_rpc(request, api_key).dump();
}

// ---- tool bodies ----------------------------------------------------------

nlohmann::json ToolService::tool_list_runs(const nlohmann::json& args,
                                           const Principal& p) {
  require_read(p);
  RunFilter filter;
  if (args.contains("status")) {
    try {
      filter.status = run_status_from_name(args.at("status").get<std::string>());
    } catch (const Error&) {
      throw RpcFault(rpc::kInvalidParams,
                     "status must be RUNNING, SUCCESS, FAILED or BLOCKED");
    }
  }
  if (args.contains("project")) {
    filter.project = args.at("project").get<std::string>();
  }
  if (args.contains("limit")) {
    int64_t limit = args.at("limit").get<int64_t>();
    if (limit < 0) throw RpcFault(rpc::kInvalidParams, "limit must be >= 0");
    filter.limit = static_cast<size_t>(limit);
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& rec : engine_.get_runs(filter)) runs.push_back(rec.to_json());
  return {{"runs", std::move(runs)}};
}

nlohmann::json ToolService::tool_get_run_logs(const nlohmann::json& args,
                                              const Principal& p) {
  require_read(p);
  std::string run_id = args.at("run_id").get<std::string>();
  nlohmann::json logs = nlohmann::json::array();
  for (const auto& log : engine_.get_run_logs(run_id)) {
    logs.push_back({{"step", log.step},
                    {"seq", log.seq},
                    {"severity", log.severity},
                    {"text", log.text}});
  }
  return {{"run_id", run_id}, {"logs", std::move(logs)}};
}

nlohmann::json ToolService::tool_list_branches(const nlohmann::json&,
                                               const Principal& p) {
  require_read(p);
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& b : ws_.catalog().list_branches()) {
    branches.push_back({{"name", b.name}, {"head", b.head.hex()}});
  }
  return {{"branches", std::move(branches)}};
}

nlohmann::json ToolService::tool_create_branch(const nlohmann::json& args,
                                               const Principal& p) {
  std::string name = args.at("name").get<std::string>();
  Decision d = authorize(p, {ActionKind::Write, name});
  if (!d.allowed) {
    throw RpcFault(rpc::kDomainError, d.reason, {{"kind", "PermissionDenied"}});
  }
  std::string from = args.value("from_ref", "main");
  BranchRef ref = ws_.catalog().create_branch(name, from);
  return {{"name", ref.name}, {"head", ref.head.hex()}};
}

nlohmann::json ToolService::tool_list_tables(const nlohmann::json& args,
                                             const Principal& p) {
  require_read(p);
  std::string ref = args.at("ref").get<std::string>();
  return {{"ref", ref}, {"tables", ws_.catalog().list_tables(ref)}};
}

nlohmann::json ToolService::tool_get_table_schema(const nlohmann::json& args,
                                                  const Principal& p) {
  require_read(p);
  std::string ref = args.at("ref").get<std::string>();
  std::string table = args.at("table").get<std::string>();
  Commit commit = ws_.catalog().load_commit(ws_.catalog().resolve_ref(ref));
  auto it = commit.table_map.find(table);
  if (it == commit.table_map.end()) {
    raise(Errc::UnknownTable, "no table '" + table + "' at " + ref);
  }
  auto schema_bytes = ws_.catalog().get_object(it->second.schema_id);
  if (!schema_bytes) {
    raise(Errc::DanglingSnapshot, "schema object missing for " + table);
  }
  return {{"table", table},
          {"row_count", it->second.row_count},
          {"schema", nlohmann::json::parse(*schema_bytes)}};
}

nlohmann::json ToolService::tool_query_table(const nlohmann::json& args,
                                             const Principal& p) {
  require_read(p);
  std::string ref = args.at("ref").get<std::string>();
  Plan plan = parse_plan(args.at("plan").get<std::string>());

  uint64_t cap = kQueryRowCap;
  if (args.contains("limit")) {
    int64_t limit = args.at("limit").get<int64_t>();
    if (limit < 0) throw RpcFault(rpc::kInvalidParams, "limit must be >= 0");
    cap = std::min<uint64_t>(static_cast<uint64_t>(limit), kQueryRowCap);
  }

  Commit commit = ws_.catalog().load_commit(ws_.catalog().resolve_ref(ref));
  std::map<std::string, Table> inputs;
  for (const auto& name : plan.input_names()) {
    auto it = commit.table_map.find(name);
    if (it == commit.table_map.end()) {
      raise(Errc::UnknownTable, "no table '" + name + "' at " + ref);
    }
    auto bytes = ws_.catalog().get_object(it->second.data_id);
    if (!bytes) {
      raise(Errc::DanglingSnapshot, "data object missing for " + name);
    }
    inputs.emplace(name, decode_table(*bytes));
  }

  Table out = eval_plan(plan, inputs);
  uint64_t shown = std::min(out.row_count, cap);
  nlohmann::json rows = nlohmann::json::array();
  for (uint64_t r = 0; r < shown; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (size_t c = 0; c < out.columns.size(); ++c) {
      row.push_back(cell_to_json(out.columns[c][r]));
    }
    rows.push_back(std::move(row));
  }
  return {{"schema", schema_to_json(out.schema)},
          {"rows", std::move(rows)},
          {"row_count", out.row_count},
          {"truncated", shown < out.row_count}};
}

nlohmann::json ToolService::tool_diff_refs(const nlohmann::json& args,
                                           const Principal& p) {
  require_read(p);
  TableDiffSet diff = ws_.catalog().diff(args.at("ref_a").get<std::string>(),
                                         args.at("ref_b").get<std::string>());
  nlohmann::json changed = nlohmann::json::array();
  for (const auto& [name, change] : diff.changed) {
    changed.push_back({{"table", name},
                       {"rows_before", change.before.row_count},
                       {"rows_after", change.after.row_count}});
  }
  return {{"added", diff.added},
          {"removed", diff.removed},
          {"changed", std::move(changed)},
          {"empty", diff.empty()}};
}

nlohmann::json ToolService::tool_registry_info(const nlohmann::json& args,
                                               const Principal& p) {
  require_read(p);
  std::string package = args.at("package").get<std::string>();
  PackageRegistry registry = ws_.load_registry();
  const PackageInfo* info = registry.find(package);
  if (!info) {
    raise(Errc::UnknownPackage, "no such package: " + package);
  }
  nlohmann::json dependencies = nlohmann::json::object();
  for (const auto& version : info->versions) {
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& d : registry.dependencies_of(package, version)) {
      deps.push_back({{"pkg", d.package}, {"range", d.range.text()}});
    }
    if (!deps.empty()) dependencies[version] = std::move(deps);
  }
  nlohmann::json conflicts = nlohmann::json::array();
  for (const auto& rule : registry.conflicts()) {
    if (rule.a_package != package && rule.b_package != package) continue;
    conflicts.push_back({{"a", rule.a_package + "@" + rule.a_range.text()},
                         {"b", rule.b_package + "@" + rule.b_range.text()},
                         {"message", rule.message}});
  }
  return {{"name", package},
          {"versions", info->versions},
          {"latest", info->latest},
          {"dependencies", std::move(dependencies)},
          {"conflicts", std::move(conflicts)}};
}

nlohmann::json ToolService::tool_get_project(const nlohmann::json& args,
                                             const Principal& p) {
  require_read(p);
  std::string name = args.at("project").get<std::string>();
  PipelineSpec spec = load_project(ws_.project_dir(name));
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : spec.models) {
    models.push_back(
        {{"name", m.name},
         {"inputs", m.inputs},
         {"plan", print_plan(m.plan)},
         {"materialization",
          m.materialization == Materialization::Replace ? "REPLACE" : "NONE"},
         {"env", {{"runtime", m.env.runtime_version}, {"pins", m.env.pins}}}});
  }
  return {{"name", spec.name}, {"models", std::move(models)}};
}

nlohmann::json ToolService::tool_set_model_env(const nlohmann::json& args,
                                               const Principal& p) {
  bool can_write = std::any_of(
      p.grants.begin(), p.grants.end(), [](const Grant& g) {
        return g.kind == GrantKind::Write || g.kind == GrantKind::Admin;
      });
  if (!can_write) {
    throw RpcFault(rpc::kDomainError,
                   "key '" + p.key_id + "' has no WRITE grant",
                   {{"kind", "PermissionDenied"}});
  }

  std::string project = args.at("project").get<std::string>();
  std::string model = args.at("model").get<std::string>();
  const nlohmann::json& env = args.at("env");
  for (auto it = env.begin(); it != env.end(); ++it) {
    if (it.key() != "runtime" && it.key() != "pins") {
      throw RpcFault(rpc::kInvalidParams,
                     "env supports only runtime and pins, got '" + it.key() + "'");
    }
  }

  std::filesystem::path manifest = ws_.project_dir(project) / "pipeline.json";
  nlohmann::json doc = read_json_file(manifest);
  std::string before = doc.dump(2);

  bool found = false;
  for (auto& m : doc.at("models")) {
    if (m.at("name") != model) continue;
    found = true;
    if (env.contains("runtime")) m["env"]["runtime"] = env.at("runtime");
    if (env.contains("pins")) m["env"]["pins"] = env.at("pins");
  }
  if (!found) {
    raise(Errc::ManifestError, "project " + project + " has no model " + model);
  }

  write_file_atomic(manifest, doc.dump(2) + "\n");
  try {
    load_project(ws_.project_dir(project));  // reject envs that break the project
  } catch (const Error& e) {
    write_file_atomic(manifest, before + "\n");
    raise(Errc::InvalidArgument, std::string("rejected env: ") + e.what());
  }

  PipelineSpec spec = load_project(ws_.project_dir(project));
  const ModelNode* node = spec.find_model(model);
  return {{"project", project},
          {"model", model},
          {"env",
           {{"runtime", node->env.runtime_version}, {"pins", node->env.pins}}}};
}

nlohmann::json ToolService::tool_run_pipeline(const nlohmann::json& args,
                                              const Principal& p) {
  std::string project = args.at("project").get<std::string>();
  std::string branch = args.at("branch").get<std::string>();
  RunOptions options;
  options.no_merge = args.value("no_merge", false);
  PipelineSpec spec = load_project(ws_.project_dir(project));
  RunRecord rec = engine_.run_pipeline(spec, branch, p, options);
  return rec.to_json();
}

nlohmann::json ToolService::tool_request_merge(const nlohmann::json& args,
                                               const Principal& p) {
  std::string source = args.at("source").get<std::string>();
  std::string target = args.at("target").get<std::string>();
  GateOutcome outcome = ws_.governance().gated_merge(p, source, target);
  switch (outcome.status) {
    case GateStatus::Merged:
      return {{"status", "MERGED"},
              {"commit", outcome.commit->id.hex()},
              {"report", outcome.report ? outcome.report->to_json()
                                        : nlohmann::json(nullptr)}};
    case GateStatus::Denied:
      throw RpcFault(rpc::kDomainError, outcome.reason, {{"kind", "DENIED"}});
    case GateStatus::VerificationFailed:
      throw RpcFault(rpc::kDomainError, "verification failed",
                     {{"kind", "VERIFICATION_FAILED"},
                      {"report", outcome.report->to_json()}});
  }
  throw RpcFault(rpc::kDomainError, "unreachable", {{"kind", "EvalError"}});
}

}  // namespace minilake
