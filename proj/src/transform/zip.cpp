#include <zlib.h>

#include <fstream>
#include <sstream>

#include "psum/detail/binio.hpp"
#include "psum/detail/zip.hpp"
#include "psum/error.hpp"

namespace psum::detail {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDeflate = 8;

std::vector<std::uint8_t> deflate_raw(const std::vector<std::uint8_t>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(Errc::io, "zip: deflateInit failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 16);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) fail(Errc::io, "zip: deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> inflate_raw(const std::uint8_t* in, std::size_t n, std::size_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) fail(Errc::io, "zip: inflateInit failed");
  std::vector<std::uint8_t> out(expected);
  zs.next_in = const_cast<Bytef*>(in);
  zs.avail_in = static_cast<uInt>(n);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) fail(Errc::format, "zip: corrupt deflate stream");
  return out;
}

std::uint32_t crc(const std::vector<std::uint8_t>& d) {
  return static_cast<std::uint32_t>(crc32(0L, d.data(), static_cast<uInt>(d.size())));
}

}  // namespace

void write_zip(const std::filesystem::path& path, const std::vector<ZipEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + path.string());
  struct Central {
    std::string name;
    std::uint32_t crc, csize, usize, offset;
  };
  std::vector<Central> central;
  std::uint32_t offset = 0;
  for (const auto& e : entries) {
    const auto packed = deflate_raw(e.data);
    Central c{e.name, crc(e.data), static_cast<std::uint32_t>(packed.size()), static_cast<std::uint32_t>(e.data.size()),
              offset};
    put_le<std::uint32_t>(out, kLocalSig);
    put_le<std::uint16_t>(out, 20);  // version needed
    put_le<std::uint16_t>(out, 0);   // flags
    put_le<std::uint16_t>(out, kDeflate);
    put_le<std::uint16_t>(out, 0);  // mod time
    put_le<std::uint16_t>(out, 0x21);  // mod date 1980-01-01
    put_le<std::uint32_t>(out, c.crc);
    put_le<std::uint32_t>(out, c.csize);
    put_le<std::uint32_t>(out, c.usize);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    put_le<std::uint16_t>(out, 0);
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    offset += 30 + static_cast<std::uint32_t>(e.name.size()) + c.csize;
    central.push_back(std::move(c));
  }
  const std::uint32_t cd_start = offset;
  for (const auto& c : central) {
    put_le<std::uint32_t>(out, kCentralSig);
    put_le<std::uint16_t>(out, 20);  // made by
    put_le<std::uint16_t>(out, 20);
    put_le<std::uint16_t>(out, 0);
    put_le<std::uint16_t>(out, kDeflate);
    put_le<std::uint16_t>(out, 0);
    put_le<std::uint16_t>(out, 0x21);
    put_le<std::uint32_t>(out, c.crc);
    put_le<std::uint32_t>(out, c.csize);
    put_le<std::uint32_t>(out, c.usize);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.name.size()));
    put_le<std::uint16_t>(out, 0);  // extra
    put_le<std::uint16_t>(out, 0);  // comment
    put_le<std::uint16_t>(out, 0);  // disk
    put_le<std::uint16_t>(out, 0);  // internal attrs
    put_le<std::uint32_t>(out, 0);  // external attrs
    put_le<std::uint32_t>(out, c.offset);
    out.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
    offset += 46 + static_cast<std::uint32_t>(c.name.size());
  }
  put_le<std::uint32_t>(out, kEndSig);
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(central.size()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(central.size()));
  put_le<std::uint32_t>(out, offset - cd_start);
  put_le<std::uint32_t>(out, cd_start);
  put_le<std::uint16_t>(out, 0);
  if (!out) fail(Errc::io, "zip: write failed");
}

std::vector<ZipEntry> read_zip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  std::vector<ZipEntry> entries;
  while (true) {
    const auto sig = get_le<std::uint32_t>(in);
    if (sig != kLocalSig) break;
    get_le<std::uint16_t>(in);
    const auto flags = get_le<std::uint16_t>(in);
    const auto method = get_le<std::uint16_t>(in);
    get_le<std::uint16_t>(in);
    get_le<std::uint16_t>(in);
    const auto want_crc = get_le<std::uint32_t>(in);
    const auto csize = get_le<std::uint32_t>(in);
    const auto usize = get_le<std::uint32_t>(in);
    const auto name_len = get_le<std::uint16_t>(in);
    const auto extra_len = get_le<std::uint16_t>(in);
    if (flags & 0x8) fail(Errc::format, "zip: data descriptors are not supported");
    ZipEntry e;
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    in.ignore(extra_len);
    std::vector<std::uint8_t> packed(csize);
    if (!in.read(reinterpret_cast<char*>(packed.data()), csize)) fail(Errc::format, "zip: truncated entry");
    if (method == kDeflate) e.data = inflate_raw(packed.data(), packed.size(), usize);
    else if (method == 0) e.data = std::move(packed);
    else fail(Errc::format, "zip: unsupported compression method");
    if (crc(e.data) != want_crc) fail(Errc::format, "zip: CRC mismatch in " + e.name);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace psum::detail
