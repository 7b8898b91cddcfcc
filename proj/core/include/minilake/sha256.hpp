#pragma once

#include <string>
#include <string_view>

namespace minilake {

// SHA-256 digest of the bytes, as 64 lowercase hex chars.
std::string sha256_hex(std::string_view bytes);

// Constant-time equality for secret comparisons. Length mismatch still
// returns in time proportional to the longer input.
bool secure_equal(std::string_view a, std::string_view b);

}  // namespace minilake
