#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Minimal ZIP archive (deflate entries, no ZIP64) on top of zlib.
namespace psum::detail {

struct ZipEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

void write_zip(const std::filesystem::path& path, const std::vector<ZipEntry>& entries);
std::vector<ZipEntry> read_zip(const std::filesystem::path& path);

}  // namespace psum::detail
