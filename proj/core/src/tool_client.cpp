#include "minilake/tool_client.hpp"

#include "httplib.h"

namespace minilake {

RpcResult RpcResult::from_envelope(const nlohmann::json& envelope) {
  RpcResult r;
  if (!envelope.is_object()) {
    r.error_kind = "TransportError";
    r.error_message = "malformed response envelope";
    return r;
  }
  if (envelope.contains("result")) {
    r.ok = true;
    r.result = envelope.at("result");
    return r;
  }
  if (envelope.contains("error")) {
    const auto& err = envelope.at("error");
    r.error_code = err.value("code", 0);
    r.error_message = err.value("message", "");
    if (err.contains("data")) {
      r.error_data = err.at("data");
      if (r.error_data.is_object() && r.error_data.contains("kind")) {
        r.error_kind = r.error_data.at("kind").get<std::string>();
      }
    }
    return r;
  }
  r.error_kind = "TransportError";
  r.error_message = "response has neither result nor error";
  return r;
}

InProcessToolClient::InProcessToolClient(ToolService& service,
                                         std::string api_key)
    : service_(service), api_key_(std::move(api_key)) {}

RpcResult InProcessToolClient::call(const std::string& method,
                                    const nlohmann::json& params) {
  nlohmann::json request = {{"jsonrpc", "2.0"},
                            {"id", next_id_++},
                            {"method", method},
                            {"params", params}};
  return RpcResult::from_envelope(service_.handle_rpc(request, api_key_));
}

struct HttpToolClient::Impl {
  httplib::Client client;
  std::string api_key;

  Impl(const std::string& host, int port, std::string key)
      : client(host, port), api_key(std::move(key)) {
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(60, 0);
  }
};

HttpToolClient::HttpToolClient(std::string host, int port, std::string api_key)
    : impl_(std::make_unique<Impl>(host, port, std::move(api_key))) {}

HttpToolClient::~HttpToolClient() = default;

RpcResult HttpToolClient::call(const std::string& method,
                               const nlohmann::json& params) {
  nlohmann::json request = {{"jsonrpc", "2.0"},
                            {"id", next_id_++},
                            {"method", method},
                            {"params", params}};
  httplib::Headers headers = {{"X-API-Key", impl_->api_key}};
  auto res = impl_->client.Post("/rpc", headers, request.dump(),
                                "application/json");
  if (!res) {
    RpcResult r;
    r.error_kind = "TransportError";
    r.error_message = "no response: " + httplib::to_string(res.error());
    return r;
  }
  nlohmann::json envelope = nlohmann::json::parse(res->body, nullptr, false);
  if (envelope.is_discarded()) {
    RpcResult r;
    r.error_kind = "TransportError";
    r.error_message = "unparseable response body";
    return r;
  }
  return RpcResult::from_envelope(envelope);
}

}  // namespace minilake
