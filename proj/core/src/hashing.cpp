#include "hmc/hashing.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hmc/errors.hpp"

namespace hmc {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::uint64_t parse_hash_hex(const std::string& hex) {
  if (hex.size() != 16 ||
      hex.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw ParseError(ParseError::Kind::BadHeader,
                     "malformed content hash '" + hex + "'");
  }
  return std::stoull(hex, nullptr, 16);
}

}  // namespace hmc
