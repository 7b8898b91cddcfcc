#include "minilake/sha256.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <stdexcept>

namespace minilake {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &digest_len,
                 EVP_sha256(), nullptr) != 1 ||
      digest_len != 32) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out(64, '0');
  for (unsigned int i = 0; i < digest_len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0x0f];
  }
  return out;
}

bool secure_equal(std::string_view a, std::string_view b) {
  const std::string_view& longer = a.size() >= b.size() ? a : b;
  uint8_t diff = a.size() == b.size() ? 0 : 1;
  for (size_t i = 0; i < longer.size(); ++i) {
    uint8_t ca = i < a.size() ? static_cast<uint8_t>(a[i]) : 0;
    uint8_t cb = i < b.size() ? static_cast<uint8_t>(b[i]) : 0;
    diff |= static_cast<uint8_t>(ca ^ cb);
  }
  return diff == 0;
}

}  // namespace minilake
