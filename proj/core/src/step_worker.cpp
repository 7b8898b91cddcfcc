#include "minilake/step_worker.hpp"

#include <unistd.h>

#include <cstring>
#include <map>

#include "minilake/codec.hpp"
#include "minilake/error.hpp"
#include "minilake/eval.hpp"
#include "minilake/plan_parser.hpp"
#include "minilake/table.hpp"

namespace minilake {

namespace wire {

bool read_exact(int fd, void* buf, size_t n) {
  auto* p = static_cast<char*>(buf);
  size_t got = 0;
  while (got < n) {
    ssize_t r = ::read(fd, p + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (r == 0) return false;  // EOF mid-frame
    got += static_cast<size_t>(r);
  }
  return true;
}

bool write_all(int fd, const void* buf, size_t n) {
  const auto* p = static_cast<const char*>(buf);
  size_t sent = 0;
  while (sent < n) {
    ssize_t w = ::write(fd, p + sent, n - sent);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<size_t>(w);
  }
  return true;
}

std::optional<std::string> read_frame(int fd) {
  uint8_t len_bytes[4];
  if (!read_exact(fd, len_bytes, 4)) return std::nullopt;
  uint32_t len = static_cast<uint32_t>(len_bytes[0]) |
                 static_cast<uint32_t>(len_bytes[1]) << 8 |
                 static_cast<uint32_t>(len_bytes[2]) << 16 |
                 static_cast<uint32_t>(len_bytes[3]) << 24;
  std::string payload(len, '\0');
  if (len > 0 && !read_exact(fd, payload.data(), len)) return std::nullopt;
  return payload;
}

bool write_frame(int fd, std::string_view payload) {
  uint32_t len = static_cast<uint32_t>(payload.size());
  uint8_t len_bytes[4] = {static_cast<uint8_t>(len),
                          static_cast<uint8_t>(len >> 8),
                          static_cast<uint8_t>(len >> 16),
                          static_cast<uint8_t>(len >> 24)};
  if (!write_all(fd, len_bytes, 4)) return false;
  return payload.empty() || write_all(fd, payload.data(), payload.size());
}

std::string u32_payload(uint32_t value) {
  std::string s(4, '\0');
  s[0] = static_cast<char>(value & 0xff);
  s[1] = static_cast<char>((value >> 8) & 0xff);
  s[2] = static_cast<char>((value >> 16) & 0xff);
  s[3] = static_cast<char>((value >> 24) & 0xff);
  return s;
}

}  // namespace wire

int run_step_worker(int in_fd, int out_fd) {
  auto plan_text = wire::read_frame(in_fd);
  if (!plan_text) return 2;
  auto count_frame = wire::read_frame(in_fd);
  if (!count_frame || count_frame->size() != 4) return 2;
  uint32_t count = static_cast<uint32_t>(static_cast<uint8_t>((*count_frame)[0])) |
                   static_cast<uint32_t>(static_cast<uint8_t>((*count_frame)[1])) << 8 |
                   static_cast<uint32_t>(static_cast<uint8_t>((*count_frame)[2])) << 16 |
                   static_cast<uint32_t>(static_cast<uint8_t>((*count_frame)[3])) << 24;

  std::map<std::string, Table> inputs;
  for (uint32_t i = 0; i < count; ++i) {
    auto name = wire::read_frame(in_fd);
    auto bytes = wire::read_frame(in_fd);
    if (!name || !bytes) return 2;
    try {
      inputs.emplace(*name, decode_table(*bytes));
    } catch (const Error&) {
      return 2;  // corrupt request, not an evaluation failure
    }
  }

  uint8_t status = wire::kStatusOk;
  std::string reply;
  try {
    Plan plan = parse_plan(*plan_text);
    Table out = eval_plan(plan, inputs);
    reply = encode_table(out);
  } catch (const Error& e) {
    status = wire::kStatusFailed;
    reply = std::string(e.kind()) + ": " + e.what();
  }
  if (!wire::write_all(out_fd, &status, 1)) return 2;
  if (!wire::write_frame(out_fd, reply)) return 2;
  return 0;
}

}  // namespace minilake
