#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minilake/governance.hpp"
#include "minilake/run_engine.hpp"
#include "minilake/workspace.hpp"
#include "json.hpp"

namespace minilake {

namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kAuthFailed = -32001;
inline constexpr int kDomainError = -32000;
}  // namespace rpc

struct ToolField {
  std::string name;
  std::string type;  // string | integer | boolean | object
  bool required = true;
  std::string description;
};

struct ToolDescriptor {
  std::string name;
  std::string description;
  std::string category;  // OBSERVABILITY | EXPLORATION | EXECUTION | GOVERNANCE
  std::vector<ToolField> fields;

  nlohmann::json to_json() const;
};

// Raised by tool bodies to surface a specific JSON-RPC error envelope
// (auth failures, invalid params, gate refusals with structured data).
class RpcFault : public std::runtime_error {
 public:
  RpcFault(int code, std::string message, nlohmann::json data = nullptr)
      : std::runtime_error(std::move(message)), code_(code), data_(std::move(data)) {}

  int code() const { return code_; }
  const nlohmann::json& data() const { return data_; }

 private:
  int code_;
  nlohmann::json data_;
};

// The MCP-shaped tool surface: tools/list + tools/call over JSON-RPC,
// one descriptor per lakehouse operation. The tool layer adds argument
// validation, authentication, and authorization, never semantics — every
// result is reachable through the corresponding library call.
class ToolService {
 public:
  explicit ToolService(Workspace& workspace);

  const std::vector<ToolDescriptor>& descriptors() const { return descriptors_; }

  // Full dispatch for one parsed request envelope; never throws.
  nlohmann::json handle_rpc(const nlohmann::json& request,
                            const std::optional<std::string>& api_key);
  // Raw-body entry point used by the HTTP server (-32700 on bad JSON).
  std::string handle_body(const std::string& body,
                          const std::optional<std::string>& api_key);

  // Library-level tool invocation (already-authenticated principal).
  nlohmann::json call_tool(const std::string& name, const nlohmann::json& args,
                           const Principal& principal);

  RunEngine& engine() { return engine_; }

 private:
  void validate_args(const ToolDescriptor& descriptor,
                     const nlohmann::json& args) const;
  const ToolDescriptor* find_descriptor(const std::string& name) const;
  void require_read(const Principal& principal) const;

  nlohmann::json tool_list_runs(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_get_run_logs(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_list_branches(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_create_branch(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_list_tables(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_get_table_schema(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_query_table(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_diff_refs(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_registry_info(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_get_project(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_set_model_env(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_run_pipeline(const nlohmann::json& args, const Principal& p);
  nlohmann::json tool_request_merge(const nlohmann::json& args, const Principal& p);

  Workspace& ws_;
  RunEngine engine_;
  std::vector<ToolDescriptor> descriptors_;
};

// JSON value for one cell; non-finite floats become the strings "NaN",
// "Infinity", "-Infinity" since JSON has no encoding for them.
nlohmann::json cell_to_json(const CellValue& cell);
nlohmann::json schema_to_json(const Schema& schema);

}  // namespace minilake
