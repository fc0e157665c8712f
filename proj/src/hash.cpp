#include "rdbench/hash.hpp"

#include <cstdio>
#include <vector>

#include "rdbench/error.hpp"

namespace rdbench {

uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path.string() + "' for hashing");
  uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0)
    h = fnv1a(std::string_view(buf.data(), n), h);
  std::fclose(f);
  return h;
}

std::string to_hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace rdbench
