#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tdm {

// Streaming FNV-1a (64 bit), used for artifact content hashes and config
// fingerprints. Not cryptographic; detects corruption and mismatched inputs.
class Hasher {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t hash_bytes(const void* data, std::size_t n) {
  Hasher h;
  h.update(data, n);
  return h.digest();
}

std::string hash_hex(std::uint64_t h);

}  // namespace tdm
