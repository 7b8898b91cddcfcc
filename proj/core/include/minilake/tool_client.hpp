#pragma once

#include <memory>
#include <string>

#include "minilake/tool_service.hpp"
#include "json.hpp"

namespace minilake {

// One round trip's outcome as a value: either a result document or an
// error (code, message, kind). Transport failures use code 0 and kind
// "TransportError" so policies can treat them like any other error.
struct RpcResult {
  bool ok = false;
  nlohmann::json result;
  int error_code = 0;
  std::string error_message;
  std::string error_kind;
  nlohmann::json error_data;

  static RpcResult from_envelope(const nlohmann::json& envelope);
};

class ToolClient {
 public:
  virtual ~ToolClient() = default;

  virtual RpcResult call(const std::string& method,
                         const nlohmann::json& params) = 0;

  RpcResult call_tool(const std::string& name, const nlohmann::json& arguments) {
    return call("tools/call", {{"name", name}, {"arguments", arguments}});
  }
  RpcResult list_tools() { return call("tools/list", nlohmann::json::object()); }
};

// Same dispatch path as the HTTP server, minus the socket.
class InProcessToolClient final : public ToolClient {
 public:
  InProcessToolClient(ToolService& service, std::string api_key);

  RpcResult call(const std::string& method, const nlohmann::json& params) override;

 private:
  ToolService& service_;
  std::string api_key_;
  int64_t next_id_ = 1;
};

class HttpToolClient final : public ToolClient {
 public:
  HttpToolClient(std::string host, int port, std::string api_key);
  ~HttpToolClient() override;

  RpcResult call(const std::string& method, const nlohmann::json& params) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int64_t next_id_ = 1;
};

}  // namespace minilake
