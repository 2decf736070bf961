#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "psum/detail/binio.hpp"
#include "psum/detail/zip.hpp"
#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

namespace {

using nlohmann::json;

std::string frame_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.bin", k);
  return buf;
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  detail::ByteWriter w;
  for (const Matrix* m : {&f.y, &f.u, &f.v})
    for (double v : m->data) w.put<double>(v);
  return w.take();
}

// Luminance may be stored at padded size (SF key frames); chroma never is.
Frame decode_frame(const std::vector<std::uint8_t>& bytes, std::size_t yr, std::size_t yc, std::size_t r,
                   std::size_t c) {
  if (bytes.size() != 8 * (yr * yc + 2 * r * c)) fail(Errc::format, "frame: unexpected plane size");
  detail::ByteReader rd(bytes);
  Frame f{Matrix(yr, yc), Matrix(r, c), Matrix(r, c)};
  for (Matrix* m : {&f.y, &f.u, &f.v})
    for (double& v : m->data) v = rd.get<double>();
  return f;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& p, const std::vector<std::uint8_t>& d) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + p.string());
  out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
}

json header_for(const PartitionMeta& m) {
  return json{{"width", m.width},
              {"height", m.height},
              {"fps", m.fps},
              {"frame_count", m.frame_count},
              {"keyframes", m.keyframes},
              {"levels", m.levels},
              {"wavelet", to_string(m.wavelet)},
              {"padded_width", m.padded_width},
              {"padded_height", m.padded_height}};
}

}  // namespace

FrameContent read_frame_dir(const std::filesystem::path& dir) {
  std::ifstream hin(dir / "header.json");
  if (!hin) fail(Errc::io, "frame dir: missing header.json in " + dir.string());
  json h;
  try {
    hin >> h;
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("frame dir: bad header: ") + e.what());
  }
  FrameContent fc;
  const std::size_t w = h.at("width"), hgt = h.at("height"), n = h.at("frame_count");
  fc.fps = h.at("fps");
  for (std::size_t k = 0; k < n; ++k) fc.frames.push_back(decode_frame(read_all(dir / frame_name(k)), hgt, w, hgt, w));
  fc.validate();
  return fc;
}

void write_frame_dir(const std::filesystem::path& dir, const FrameContent& content) {
  content.validate();
  std::filesystem::create_directories(dir);
  PartitionMeta m;
  m.width = content.frames.front().y.cols;
  m.height = content.frames.front().y.rows;
  m.fps = content.fps;
  m.frame_count = content.frames.size();
  json h{{"width", m.width}, {"height", m.height}, {"fps", m.fps}, {"frame_count", m.frame_count}};
  std::ofstream(dir / "header.json") << h.dump(2) << '\n';
  for (std::size_t k = 0; k < content.frames.size(); ++k) write_all(dir / frame_name(k), encode_frame(content.frames[k]));
}

void save_supplementary_zip(const std::filesystem::path& path, const SupplementaryFile& sf) {
  require(sf.meta.kind == ContentKind::frames, "supplementary zip: not frame content");
  std::vector<detail::ZipEntry> entries;
  const auto h = header_for(sf.meta).dump(2);
  entries.push_back({"header.json", {h.begin(), h.end()}});
  for (std::size_t k = 0; k < sf.frames.size(); ++k) entries.push_back({frame_name(k), encode_frame(sf.frames[k])});
  detail::write_zip(path, entries);
}

SupplementaryFile load_supplementary_zip(const std::filesystem::path& path, const PartitionMeta& meta) {
  require(meta.kind == ContentKind::frames, "supplementary zip: metadata is not frame content");
  const auto entries = detail::read_zip(path);
  if (entries.empty() || entries.front().name != "header.json") fail(Errc::format, "supplementary zip: missing header");
  const auto h = json::parse(entries.front().data.begin(), entries.front().data.end());
  if (h.at("frame_count").get<std::size_t>() != meta.frame_count || entries.size() != meta.frame_count + 1)
    fail(Errc::length_mismatch, "supplementary zip: frame count differs from base-file metadata");
  SupplementaryFile sf;
  sf.meta = meta;
  std::vector<bool> is_key(meta.frame_count, false);
  for (auto k : meta.keyframes) is_key[k] = true;
  for (std::size_t k = 0; k < meta.frame_count; ++k) {
    const std::size_t yr = is_key[k] ? meta.padded_height : meta.height;
    const std::size_t yc = is_key[k] ? meta.padded_width : meta.width;
    sf.frames.push_back(decode_frame(entries[k + 1].data, yr, yc, meta.height, meta.width));
  }
  return sf;
}

}  // namespace psum::transform
