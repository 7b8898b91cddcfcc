#include "minilake/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>

#include "minilake/codec.hpp"
#include "minilake/error.hpp"
#include "minilake/eval.hpp"
#include "minilake/plan_ast.hpp"
#include "minilake/step_worker.hpp"

namespace minilake {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

// Synthetic truncated interpreter traceback; the final line carries the
// registry's conflict message so log scrapers get a realistic signature.
std::vector<std::string> conflict_traceback(const std::string& step,
                                            const ConflictResult& conflict) {
  return {
      "Traceback (most recent call last):",
      "  File \"steps/" + step + ".py\", line 1, in <module>",
      "    import " + conflict.a_package,
      "  File \"site-packages/" + conflict.a_package +
          "/__init__.py\", line 22, in <module>",
      "    from " + conflict.a_package + ".compat import " + conflict.b_package +
          "_compat",
      "ImportError: " + conflict.message,
  };
}

struct Pipe {
  int fds[2] = {-1, -1};
  bool open() { return ::pipe(fds) == 0; }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
  ~Pipe() {
    close_read();
    close_write();
  }
};

int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

WhitelistResult check_whitelist(const EnvSpec& env,
                                const std::set<std::string>& whitelist) {
  WhitelistResult result;
  for (const auto& [pkg, ver] : env.pins) {
    (void)ver;
    if (!whitelist.count(pkg)) result.violations.push_back(pkg);
  }
  result.ok = result.violations.empty();
  return result;
}

ConflictResult check_conflicts(const ResolvedEnv& env,
                               const PackageRegistry& registry) {
  for (const auto& rule : registry.conflicts()) {
    auto a = env.installed.find(rule.a_package);
    auto b = env.installed.find(rule.b_package);
    if (a == env.installed.end() || b == env.installed.end()) continue;
    if (rule.a_range.contains(a->second) && rule.b_range.contains(b->second)) {
      return {false, rule.message, rule.a_package, rule.b_package};
    }
  }
  return {};
}

std::vector<std::string> default_worker_command() {
  const char* exe = std::getenv("MINILAKE_WORKER_EXE");
  if (!exe || !*exe) return {};
  return {exe, "step-worker"};
}

Sandbox::Sandbox(PackageRegistry registry,
                 std::optional<std::set<std::string>> whitelist,
                 std::vector<std::string> worker_command, int timeout_ms)
    : registry_(std::move(registry)),
      whitelist_(std::move(whitelist)),
      worker_command_(std::move(worker_command)),
      timeout_ms_(timeout_ms) {}

WhitelistResult Sandbox::check(const EnvSpec& env) const {
  if (!whitelist_) return {};  // no whitelist file: everything allowed
  return check_whitelist(env, *whitelist_);
}

StepOutcome Sandbox::execute_step(const ModelNode& node, const ResolvedEnv& env,
                                  const std::map<std::string, Table>& inputs,
                                  IsolationMode mode) {
  execute_calls_.fetch_add(1);

  ConflictResult conflict = check_conflicts(env, registry_);
  if (!conflict.ok) {
    // Short-circuit: the "import" fails before the plan ever runs.
    StepOutcome out;
    out.status = StepStatus::Failed;
    out.log_lines = conflict_traceback(node.name, conflict);
    return out;
  }

  if (mode == IsolationMode::Subprocess) {
    return run_in_subprocess(node, inputs);
  }

  StepOutcome out;
  try {
    out.output = eval_plan(node.plan, inputs);
  } catch (const Error& e) {
    out.status = StepStatus::Failed;
    out.output.reset();
    out.log_lines = split_lines(std::string(e.kind()) + ": " + e.what());
  }
  return out;
}

StepOutcome Sandbox::run_in_subprocess(
    const ModelNode& node, const std::map<std::string, Table>& inputs) {
  if (worker_command_.empty()) {
    raise(Errc::IsolationError,
          "no step worker configured (set MINILAKE_WORKER_EXE)");
  }

  Pipe to_child, from_child;
  if (!to_child.open() || !from_child.open()) {
    raise(Errc::IsolationError, std::string("pipe: ") + std::strerror(errno));
  }

  pid_t pid = ::fork();
  if (pid < 0) {
    raise(Errc::IsolationError, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(to_child.fds[0], STDIN_FILENO);
    ::dup2(from_child.fds[1], STDOUT_FILENO);
    to_child.close_read();
    to_child.close_write();
    from_child.close_read();
    from_child.close_write();
    std::vector<char*> argv;
    argv.reserve(worker_command_.size() + 1);
    for (auto& arg : worker_command_) argv.push_back(arg.data());
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }

  to_child.close_read();
  from_child.close_write();

  // Request. The child reads everything before replying, so a blocking
  // write here cannot deadlock.
  bool sent = wire::write_frame(to_child.fds[1], print_plan(node.plan)) &&
              wire::write_frame(to_child.fds[1],
                                wire::u32_payload(static_cast<uint32_t>(inputs.size())));
  for (const auto& [name, table] : inputs) {
    if (!sent) break;
    sent = wire::write_frame(to_child.fds[1], name) &&
           wire::write_frame(to_child.fds[1], encode_table(table));
  }
  to_child.close_write();

  // Drain the reply under a deadline.
  std::string reply;
  int64_t deadline = now_ms() + timeout_ms_;
  bool timed_out = false;
  for (;;) {
    int64_t remaining = deadline - now_ms();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    struct pollfd pfd = {from_child.fds[0], POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) {
      timed_out = true;
      break;
    }
    char buf[65536];
    ssize_t r = ::read(from_child.fds[0], buf, sizeof buf);
    if (r < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (r == 0) break;  // EOF: child done
    reply.append(buf, static_cast<size_t>(r));
  }
  from_child.close_read();

  if (timed_out) {
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    raise(Errc::IsolationError, "step worker timed out after " +
                                    std::to_string(timeout_ms_) + " ms");
  }

  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    raise(Errc::IsolationError,
          "step worker exited abnormally (status " + std::to_string(status) + ")");
  }
  if (!sent) {
    raise(Errc::IsolationError, "failed to write step request to worker");
  }

  if (reply.size() < 5) {
    raise(Errc::IsolationError, "truncated worker reply");
  }
  uint8_t code = static_cast<uint8_t>(reply[0]);
  uint32_t len = static_cast<uint32_t>(static_cast<uint8_t>(reply[1])) |
                 static_cast<uint32_t>(static_cast<uint8_t>(reply[2])) << 8 |
                 static_cast<uint32_t>(static_cast<uint8_t>(reply[3])) << 16 |
                 static_cast<uint32_t>(static_cast<uint8_t>(reply[4])) << 24;
  if (reply.size() != 5 + static_cast<size_t>(len)) {
    raise(Errc::IsolationError, "malformed worker reply framing");
  }
  std::string payload = reply.substr(5);

  StepOutcome out;
  if (code == wire::kStatusOk) {
    out.output = decode_table(payload);
  } else if (code == wire::kStatusFailed) {
    out.status = StepStatus::Failed;
    out.log_lines = split_lines(payload);
  } else {
    raise(Errc::IsolationError, "unknown worker status byte");
  }
  return out;
}

}  // namespace minilake
