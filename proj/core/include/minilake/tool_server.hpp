#pragma once

#include <memory>
#include <string>
#include <thread>

#include "minilake/tool_service.hpp"
#include "minilake/workspace.hpp"

namespace httplib {
class Server;
}

namespace minilake {

// HTTP POST /rpc carrying JSON-RPC 2.0, authenticated by X-API-Key.
class ToolServer {
 public:
  explicit ToolServer(Workspace& workspace);
  ~ToolServer();

  ToolServer(const ToolServer&) = delete;
  ToolServer& operator=(const ToolServer&) = delete;

  // Binds 127.0.0.1:port (0 picks a free port), serves on a background
  // thread, returns the bound port.
  int start(int port = 0);
  void stop();

  int port() const { return port_; }
  ToolService& service() { return service_; }

 private:
  Workspace& ws_;
  ToolService service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// Foreground serve loop for the CLI; returns a process exit code.
int serve_blocking(Workspace& workspace, int port);

}  // namespace minilake
