#include "minilake/tool_server.hpp"

#include <iostream>

#include "httplib.h"

namespace minilake {

namespace {

void install_routes(httplib::Server& server, ToolService& service) {
  server.Post("/rpc", [&service](const httplib::Request& req,
                                 httplib::Response& res) {
    std::optional<std::string> key;
    if (req.has_header("X-API-Key")) {
      key = req.get_header_value("X-API-Key");
    }
    res.set_content(service.handle_body(req.body, key), "application/json");
  });
}

}  // namespace

ToolServer::ToolServer(Workspace& workspace)
    : ws_(workspace), service_(workspace), server_(std::make_unique<httplib::Server>()) {
  install_routes(*server_, service_);
}

ToolServer::~ToolServer() { stop(); }

int ToolServer::start(int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
  } else {
    if (!server_->bind_to_port("127.0.0.1", port)) {
      raise(Errc::StorageIo, "cannot bind port " + std::to_string(port));
    }
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ToolServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

int serve_blocking(Workspace& workspace, int port) {
  httplib::Server server;
  ToolService service(workspace);
  install_routes(server, service);
  if (!server.bind_to_port("0.0.0.0", port)) {
    std::cerr << "cannot bind port " << port << "\n";
    return 2;
  }
  std::cerr << "serving /rpc on port " << port << "\n";
  if (!server.listen_after_bind()) {
    std::cerr << "server stopped unexpectedly\n";
    return 2;
  }
  return 0;
}

}  // namespace minilake
