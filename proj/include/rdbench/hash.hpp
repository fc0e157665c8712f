#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace rdbench {

// FNV-1a 64-bit; stable across platforms, used for artifact fingerprints and
// resume checks (not security).
constexpr uint64_t fnv1a(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (char c : data) {
    h ^= uint64_t(uint8_t(c));
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a_file(const std::filesystem::path& path);

std::string to_hex(uint64_t v);

}  // namespace rdbench
