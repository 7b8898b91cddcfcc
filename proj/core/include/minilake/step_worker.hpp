#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace minilake {

// Wire format between the sandbox and its evaluator child: u32
// little-endian length followed by that many payload bytes. Request
// frames in order: plan text, input count (u32 payload), then per input
// a name frame and a canonical table frame. Reply: one raw status byte
// (0 ok, 1 failed), then a single frame holding the encoded output table
// or the failure log text.
namespace wire {

inline constexpr uint8_t kStatusOk = 0;
inline constexpr uint8_t kStatusFailed = 1;

bool read_exact(int fd, void* buf, size_t n);
bool write_all(int fd, const void* buf, size_t n);
std::optional<std::string> read_frame(int fd);
bool write_frame(int fd, std::string_view payload);
std::string u32_payload(uint32_t value);

}  // namespace wire

// Blocking worker loop: services exactly one step request on the given
// descriptors and returns the process exit code. Evaluation errors are
// reported in-band as a failed reply; protocol errors return non-zero.
int run_step_worker(int in_fd, int out_fd);

}  // namespace minilake
