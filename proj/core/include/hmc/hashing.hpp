#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hmc {

/// FNV-1a 64-bit over raw bytes. Content hashes in file headers and
/// manifests use this; it is stable across platforms and builds.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of a file's full contents. Throws IoError if unreadable.
std::uint64_t hash_file(const std::string& path);

/// Fixed-width lowercase hex form used in headers and manifests.
std::string hash_hex(std::uint64_t h);

/// Inverse of hash_hex; throws ParseError on malformed input.
std::uint64_t parse_hash_hex(const std::string& hex);

}  // namespace hmc
