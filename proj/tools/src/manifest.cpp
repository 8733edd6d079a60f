#include "hmctools/manifest.hpp"

#include <fstream>

#include "hmc/errors.hpp"
#include "hmc/hashing.hpp"

namespace hmc::tools {

Json input_entry(const std::string& path) {
  return Json{{"path", path}, {"fnv1a64", hash_hex(hash_file(path))}};
}

void write_manifest(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace hmc::tools
