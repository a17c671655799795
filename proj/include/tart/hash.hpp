#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace tart {

using Digest = std::array<unsigned char, 32>;

/// Incremental SHA-256 (FIPS 180-4). Content hashes key the tangent cache to
/// the dataset file it was built from; nothing security-critical depends on
/// this, but the published test vectors are asserted in the unit suite.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, std::size_t len);
  Digest finalize();

 private:
  void process_block(const unsigned char* block);

  std::array<std::uint32_t, 8> state_;
  std::array<unsigned char, 64> buffer_;
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

Digest sha256_bytes(const void* data, std::size_t len);
Digest sha256_file(const std::string& path);
std::string hex_digest(const Digest& d);

}  // namespace tart
