#include "lsepose/lse_map.hpp"

#include <cstring>
#include <fstream>

namespace lsepose {

namespace {
constexpr std::uint32_t kMapVersion = 1;
}

void write_lse_map(const std::filesystem::path& path, const LseMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint32_t header[4] = {kMapVersion, static_cast<std::uint32_t>(map.width),
                                   static_cast<std::uint32_t>(map.height),
                                   static_cast<std::uint32_t>(map.channels)};
  out.write("LSEM", 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(map.data.data()),
            static_cast<std::streamsize>(map.data.size() * sizeof(float)));
  if (!out) throw IoError("short write to " + path.string());
}

LseMap read_lse_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  std::uint32_t header[4];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, "LSEM", 4) != 0)
    throw IoError(path.string() + ": not an embedding map");
  if (header[0] != kMapVersion)
    throw IoError(path.string() + ": unsupported map version " + std::to_string(header[0]));
  LseMap map(static_cast<int>(header[1]), static_cast<int>(header[2]),
             static_cast<int>(header[3]));
  in.read(reinterpret_cast<char*>(map.data.data()),
          static_cast<std::streamsize>(map.data.size() * sizeof(float)));
  if (!in) throw IoError(path.string() + ": truncated embedding map");
  return map;
}

}  // namespace lsepose
