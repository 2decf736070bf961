#include "psum/psum.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "psum/attacks.hpp"
#include "psum/codes.hpp"
#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/transform.hpp"
#include "psum/watermark.hpp"

struct psum_codebook {
  psum::codes::CodeBook book;
};

struct psum_content {
  psum::transform::Content content;
};

struct psum_report {
  psum::harness::ScenarioReport report;
  std::string summary;
};

namespace {

thread_local std::string g_last_error;

psum_status from_errc(psum::Errc e) {
  switch (e) {
    case psum::Errc::invalid_argument: return PSUM_E_INVALID_ARGUMENT;
    case psum::Errc::length_mismatch: return PSUM_E_LENGTH_MISMATCH;
    case psum::Errc::io: return PSUM_E_IO;
    case psum::Errc::format: return PSUM_E_FORMAT;
    case psum::Errc::auth_failure: return PSUM_E_AUTH;
    case psum::Errc::oversize: return PSUM_E_OVERSIZE;
    case psum::Errc::nonce_reuse: return PSUM_E_NONCE_REUSE;
    case psum::Errc::protocol_abort: return PSUM_E_PROTOCOL_ABORT;
    case psum::Errc::config: return PSUM_E_CONFIG;
  }
  return PSUM_E_INTERNAL;
}

psum_status set_error(psum_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
psum_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const psum::Error& e) {
    return set_error(from_errc(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PSUM_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PSUM_E_INTERNAL, e.what());
  }
}

#define PSUM_REQUIRE(cond, msg) \
  if (!(cond)) return set_error(PSUM_E_INVALID_ARGUMENT, msg)

psum::transform::SupplementaryFile load_sf(const char* path, const psum::transform::PartitionMeta& meta) {
  return meta.kind == psum::transform::ContentKind::audio ? psum::transform::load_supplementary_wav(path, meta)
                                                          : psum::transform::load_supplementary_zip(path, meta);
}

}  // namespace

extern "C" {

const char* psum_last_error(void) { return g_last_error.c_str(); }

const char* psum_status_string(psum_status s) {
  switch (s) {
    case PSUM_OK: return "ok";
    case PSUM_E_INVALID_ARGUMENT: return "invalid argument";
    case PSUM_E_LENGTH_MISMATCH: return "length mismatch";
    case PSUM_E_IO: return "i/o error";
    case PSUM_E_FORMAT: return "format error";
    case PSUM_E_AUTH: return "authentication failure";
    case PSUM_E_OVERSIZE: return "oversize";
    case PSUM_E_NONCE_REUSE: return "nonce reuse";
    case PSUM_E_PROTOCOL_ABORT: return "protocol abort";
    case PSUM_E_CONFIG: return "configuration error";
    case PSUM_E_BUFFER_TOO_SMALL: return "buffer too small";
    case PSUM_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* psum_version(void) { return "0.1.0"; }

psum_status psum_code_length(uint64_t num_users, double error_prob, size_t* out_length) {
  PSUM_REQUIRE(out_length, "out_length is NULL");
  return guarded([&] {
    *out_length = psum::codes::code_length(num_users, error_prob);
    return PSUM_OK;
  });
}

psum_status psum_codebook_generate(uint32_t num_users, uint16_t coalition_bound, double error_prob, uint64_t seed,
                                   const char* bias_path, psum_codebook** out) {
  PSUM_REQUIRE(out, "out is NULL");
  return guarded([&] {
    psum::codes::CodeParams p;
    p.num_users = num_users;
    p.coalition_bound = coalition_bound;
    p.error_prob = error_prob;
    p.seed = seed;
    auto bias = bias_path ? psum::codes::BiasDistribution::load(bias_path)
                          : psum::codes::BiasDistribution::tardos_default(coalition_bound);
    *out = new psum_codebook{psum::codes::generate_code(p, bias)};
    return PSUM_OK;
  });
}

psum_status psum_codebook_load(const char* path, psum_codebook** out) {
  PSUM_REQUIRE(path && out, "NULL argument");
  return guarded([&] {
    *out = new psum_codebook{psum::codes::CodeBook::load(std::filesystem::path(path))};
    return PSUM_OK;
  });
}

psum_status psum_codebook_save(const psum_codebook* book, const char* path) {
  PSUM_REQUIRE(book && path, "NULL argument");
  return guarded([&] {
    book->book.save(std::filesystem::path(path));
    return PSUM_OK;
  });
}

void psum_codebook_free(psum_codebook* book) { delete book; }

size_t psum_codebook_users(const psum_codebook* book) { return book ? book->book.num_users() : 0; }

size_t psum_codebook_length(const psum_codebook* book) { return book ? book->book.length() : 0; }

psum_status psum_codebook_row(const psum_codebook* book, size_t user, uint8_t* bits, size_t capacity) {
  PSUM_REQUIRE(book && bits, "NULL argument");
  return guarded([&] {
    if (user >= book->book.num_users()) return set_error(PSUM_E_INVALID_ARGUMENT, "user index out of range");
    const auto row = book->book.codeword(user);
    if (capacity < row.size()) return set_error(PSUM_E_BUFFER_TOO_SMALL, "row buffer too small");
    std::memcpy(bits, row.data(), row.size());
    return PSUM_OK;
  });
}

psum_status psum_trace(const psum_codebook* book, const int8_t* pc, size_t length, double threshold, size_t* accused,
                       size_t capacity, size_t* count, double* used_threshold) {
  PSUM_REQUIRE(book && pc && count, "NULL argument");
  PSUM_REQUIRE(accused || capacity == 0, "accused is NULL");
  return guarded([&] {
    psum::codes::PiratedCodeword w(length);
    for (size_t i = 0; i < length; ++i) {
      if (pc[i] != 0 && pc[i] != 1 && pc[i] != -1)
        return set_error(PSUM_E_INVALID_ARGUMENT, "pirate codeword entries must be 0, 1 or -1");
      w[i] = static_cast<psum::codes::Mark>(pc[i]);
    }
    const auto policy = threshold > 0.0 ? psum::codes::ThresholdPolicy::fixed(threshold) : psum::codes::ThresholdPolicy{};
    const auto r = psum::codes::trace(w, book->book, policy);
    *count = r.accused.size();
    if (used_threshold) *used_threshold = r.threshold;
    if (capacity < r.accused.size()) return set_error(PSUM_E_BUFFER_TOO_SMALL, "accused buffer too small");
    for (size_t i = 0; i < r.accused.size(); ++i) accused[i] = r.accused[i];
    return PSUM_OK;
  });
}

psum_status psum_content_synthetic_audio(uint64_t seed, double seconds, uint32_t sample_rate, uint32_t channels,
                                         psum_content** out) {
  PSUM_REQUIRE(out, "out is NULL");
  return guarded([&] {
    psum::harness::SyntheticAudio spec;
    spec.seconds = seconds;
    spec.sample_rate = sample_rate;
    spec.channels = channels;
    *out = new psum_content{psum::harness::synthetic_audio(seed, spec)};
    return PSUM_OK;
  });
}

psum_status psum_content_synthetic_frames(uint64_t seed, uint32_t frames, uint32_t width, uint32_t height,
                                          psum_content** out) {
  PSUM_REQUIRE(out, "out is NULL");
  return guarded([&] {
    psum::harness::SyntheticFrames spec;
    spec.frames = frames;
    spec.width = width;
    spec.height = height;
    *out = new psum_content{psum::harness::synthetic_frames(seed, spec)};
    return PSUM_OK;
  });
}

psum_status psum_content_load(const char* path, psum_content** out) {
  PSUM_REQUIRE(path && out, "NULL argument");
  return guarded([&] {
    *out = new psum_content{psum::harness::load_content(path)};
    return PSUM_OK;
  });
}

psum_status psum_content_save(const psum_content* content, const char* path) {
  PSUM_REQUIRE(content && path, "NULL argument");
  return guarded([&] {
    psum::harness::save_content(path, content->content);
    return PSUM_OK;
  });
}

void psum_content_free(psum_content* content) { delete content; }

int psum_content_is_audio(const psum_content* content) {
  return content && std::holds_alternative<psum::transform::AudioContent>(content->content) ? 1 : 0;
}

psum_status psum_content_psnr(const psum_content* a, const psum_content* b, double* out) {
  PSUM_REQUIRE(a && b && out, "NULL argument");
  return guarded([&] {
    *out = psum::harness::content_psnr(a->content, b->content);
    return PSUM_OK;
  });
}

psum_status psum_partition(const psum_content* content, int levels, double delta, size_t code_length,
                           const char* base_path, const char* sf_path) {
  PSUM_REQUIRE(content && base_path && sf_path, "NULL argument");
  return guarded([&] {
    psum::transform::PartitionOptions opts;
    opts.levels = levels;
    opts.delta = delta;
    opts.code_length = code_length;
    const auto part = psum::transform::make_base_file(content->content, opts);
    psum::transform::save_base_file(std::filesystem::path(base_path), part.base);
    if (part.base.meta.kind == psum::transform::ContentKind::audio)
      psum::transform::save_supplementary_wav(sf_path, part.supplementary);
    else
      psum::transform::save_supplementary_zip(sf_path, part.supplementary);
    return PSUM_OK;
  });
}

psum_status psum_embed(const char* base_path, const char* sf_path, const uint8_t* bits, size_t length,
                       psum_content** out) {
  PSUM_REQUIRE(base_path && sf_path && bits && out, "NULL argument");
  return guarded([&] {
    const auto bf = psum::transform::load_base_file(std::filesystem::path(base_path));
    const auto sf = load_sf(sf_path, bf.meta);
    const auto approx = psum::transform::select_variants(bf, std::span<const uint8_t>(bits, length));
    *out = new psum_content{psum::transform::reconstruct(approx, sf)};
    return PSUM_OK;
  });
}

psum_status psum_extract(const psum_content* content, const char* base_path, int normalize_gain, uint8_t* bits,
                         size_t capacity, size_t* length) {
  PSUM_REQUIRE(content && base_path && length, "NULL argument");
  PSUM_REQUIRE(bits || capacity == 0, "bits is NULL");
  return guarded([&] {
    const auto bf = psum::transform::load_base_file(std::filesystem::path(base_path));
    const auto got = psum::harness::extract_bits(content->content, bf, normalize_gain != 0);
    *length = got.size();
    if (capacity < got.size()) return set_error(PSUM_E_BUFFER_TOO_SMALL, "bit buffer too small");
    std::memcpy(bits, got.data(), got.size());
    return PSUM_OK;
  });
}

psum_status psum_attack(const psum_content* content, const char* spec, uint64_t seed, psum_content** out) {
  PSUM_REQUIRE(content && spec && out, "NULL argument");
  return guarded([&] {
    auto a = psum::attacks::AttackSpec::parse(spec);
    a.seed = seed;
    *out = new psum_content{psum::attacks::apply_signal_attack(content->content, a)};
    return PSUM_OK;
  });
}

psum_status psum_scenario_run(const char* config_path, int has_seed, uint64_t seed_override, const char* attacks,
                              int verbose, int deterministic, psum_report** out) {
  PSUM_REQUIRE(config_path && out, "NULL argument");
  return guarded([&] {
    const auto cfg = psum::harness::ScenarioConfig::load(config_path);
    psum::harness::RunOptions opts;
    if (has_seed) opts.seed = seed_override;
    if (attacks) {
      std::vector<std::string> list;
      std::stringstream ss(attacks);
      for (std::string a; std::getline(ss, a, ',');)
        if (!a.empty()) list.push_back(a);
      opts.attacks = list;
    }
    opts.verbose = verbose != 0;
    opts.deterministic = deterministic != 0;
    auto rep = std::make_unique<psum_report>();
    rep->report = psum::harness::run_scenario(cfg, opts);
    std::ostringstream s;
    for (const auto& c : rep->report.checks) {
      s << (c.passed ? "PASS " : "FAIL ") << c.name;
      if (!c.passed && !c.detail.empty()) s << ": " << c.detail;
      s << "\n";
    }
    rep->summary = s.str();
    *out = rep.release();
    return PSUM_OK;
  });
}

int psum_report_passed(const psum_report* report) { return report && report->report.all_passed() ? 1 : 0; }

psum_status psum_report_write(const psum_report* report, const char* out_dir) {
  PSUM_REQUIRE(report && out_dir, "NULL argument");
  return guarded([&] {
    psum::harness::write_report(report->report, out_dir);
    return PSUM_OK;
  });
}

const char* psum_report_summary(const psum_report* report) { return report ? report->summary.c_str() : ""; }

void psum_report_free(psum_report* report) { delete report; }

psum_status psum_report_csv(const char* run_dir, char** out) {
  PSUM_REQUIRE(run_dir && out, "NULL argument");
  return guarded([&] {
    const auto csv = psum::harness::report_csv(run_dir);
    char* s = static_cast<char*>(std::malloc(csv.size() + 1));
    if (!s) return set_error(PSUM_E_INTERNAL, "out of memory");
    std::memcpy(s, csv.c_str(), csv.size() + 1);
    *out = s;
    return PSUM_OK;
  });
}

void psum_string_free(char* s) { std::free(s); }

}  // extern "C"
