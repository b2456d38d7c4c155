#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdm/common.hpp"
#include "tdm/hash.hpp"

namespace tdm {

// Binary artifact container shared by datasets and checkpoints:
//   magic(8) | header_len(u64 LE) | header JSON | payload
// The header embeds the payload hash and the producing config hash; loading
// verifies magic, version and hash and refuses to guess on any mismatch.
struct ArtifactHeader {
  std::string kind;
  int version = 1;
  nlohmann::json meta;
  std::uint64_t payload_hash = 0;
  std::uint64_t config_hash = 0;
};

inline constexpr char kArtifactMagic[9] = "TDMART01";

void write_artifact(const std::filesystem::path& path, const ArtifactHeader& header,
                    const std::vector<std::uint8_t>& payload);

struct Artifact {
  ArtifactHeader header;
  std::vector<std::uint8_t> payload;
};

Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind);

// little-endian primitive append/read helpers for payload buffers
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& at);
std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t& at);
double get_f64(const std::vector<std::uint8_t>& in, std::size_t& at);

}  // namespace tdm
