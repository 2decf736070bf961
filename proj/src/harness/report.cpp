#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "psum/error.hpp"
#include "psum/harness.hpp"

namespace psum::harness {

using nlohmann::json;

transform::Content load_content(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return transform::read_frame_dir(path);
  if (!std::filesystem::exists(path)) fail(Errc::io, "no such content: " + path.string());
  return transform::read_wav(path);
}

void save_content(const std::filesystem::path& path, const transform::Content& content) {
  if (const auto* a = std::get_if<transform::AudioContent>(&content))
    transform::write_wav(path, *a, transform::SampleFormat::float32);
  else
    transform::write_frame_dir(path, std::get<transform::FrameContent>(content));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

std::string metrics_csv(std::span<const MetricRow> rows) {
  std::ostringstream out;
  out << "buyer,attack,ber,nc,psnr\n";
  for (const auto& r : rows)
    out << csv_field(r.buyer) << ',' << csv_field(r.attack) << ',' << fmt(r.ber) << ',' << fmt(r.nc) << ','
        << fmt(r.psnr) << '\n';
  return out.str();
}

void write_report(const ScenarioReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) fail(Errc::io, "cannot write " + (out_dir / name).string());
    f << text;
  };
  put("report.json", report.json.dump(2) + "\n");
  put("metrics.csv", metrics_csv(report.metrics));
  put("transcripts.jsonl", report.transcripts_jsonl);
}

std::string report_csv(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "report.json";
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("report.json: ") + e.what());
  }
  if (j.value("schema", "") != "psum-report/1") fail(Errc::format, "report.json: unsupported schema");
  std::vector<MetricRow> rows;
  try {
    for (const auto& m : j.at("metrics")) {
      const auto& p = m.at("psnr");
      rows.push_back({m.at("buyer").get<std::string>(), m.at("attack").get<std::string>(), m.at("ber").get<double>(),
                      m.at("nc").get<double>(), p.is_null() ? std::numeric_limits<double>::infinity() : p.get<double>()});
    }
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("report.json metrics: ") + e.what());
  }
  return metrics_csv(rows);
}

}  // namespace psum::harness
