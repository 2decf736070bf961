// psum: command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "psum/psum.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitConfig = 2;

struct CliError {
  int code;
  std::string msg;
};

void check(psum_status s, const std::string& what) {
  if (s == PSUM_OK) return;
  std::string msg = what + ": " + psum_status_string(s);
  if (*psum_last_error()) msg += ": " + std::string(psum_last_error());
  throw CliError{s == PSUM_E_CONFIG ? kExitConfig : kExitCheck, msg};
}

using CodebookPtr = std::unique_ptr<psum_codebook, decltype(&psum_codebook_free)>;
using ContentPtr = std::unique_ptr<psum_content, decltype(&psum_content_free)>;

CodebookPtr load_codebook(const std::string& path) {
  psum_codebook* b = nullptr;
  check(psum_codebook_load(path.c_str(), &b), "load codebook " + path);
  return {b, psum_codebook_free};
}

ContentPtr load_content(const std::string& path) {
  psum_content* c = nullptr;
  check(psum_content_load(path.c_str(), &c), "load content " + path);
  return {c, psum_content_free};
}

std::string bits_to_string(const std::vector<uint8_t>& bits) {
  std::string s;
  for (auto b : bits) s += b ? '1' : '0';
  return s;
}

std::string read_text_or_literal(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return arg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string a; std::getline(ss, a, ',');)
    if (!a.empty()) out.push_back(a);
  return out;
}

nlohmann::json load_json_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{kExitConfig, "cannot open config " + path};
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CliError{kExitConfig, "malformed config " + path + ": " + e.what()};
  }
}

template <class T>
T cfg_value(const nlohmann::json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CliError{kExitConfig, std::string("config: wrong type for \"") + key + "\""};
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitCheck, "cannot write " + path};
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psum: anonymous fingerprinting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(psum_version()));

  std::string config, out, attacks_opt, codebook, input, base, sf, bits_arg;
  std::optional<std::uint64_t> seed;
  bool verbose = false, gain = false;
  std::size_t user = 0;
  int levels = 4;
  double delta = 0.25, threshold = 0.0;

  auto* gen = app.add_subcommand("gen-code", "Generate a fingerprinting code book");
  gen->add_option("--config", config, "Scenario JSON (N, c, epsilon, seed, bias)")->required();
  gen->add_option("--out", out, "Code book file")->required();
  gen->add_option("--seed", seed, "Overrides the config seed");

  auto* part = app.add_subcommand("partition", "Split content into base file and supplementary file");
  part->add_option("--input", input, "WAV file or frame directory")->required();
  part->add_option("--codebook", codebook, "Code book (sets the number of blocks)")->required();
  part->add_option("--levels", levels, "DWT levels")->check(CLI::Range(1, 12));
  part->add_option("--delta", delta, "QIM step")->check(CLI::PositiveNumber);
  part->add_option("--out", out, "Output directory")->required();

  auto* emb = app.add_subcommand("embed", "Build a buyer's copy from base file, SF and code book row");
  emb->add_option("--base", base, "Base file")->required();
  emb->add_option("--sf", sf, "Supplementary file")->required();
  emb->add_option("--codebook", codebook, "Code book")->required();
  emb->add_option("--user", user, "Row of the code book")->required();
  emb->add_option("--out", out, "Output WAV file or frame directory")->required();

  auto* ext = app.add_subcommand("extract", "Extract the fingerprint bits from a copy");
  ext->add_option("--input", input, "WAV file or frame directory")->required();
  ext->add_option("--base", base, "Base file")->required();
  ext->add_flag("--gain-normalize", gain, "Undo amplitude scaling before extraction");
  ext->add_option("--out", out, "Bits file (default stdout)");

  auto* att = app.add_subcommand("attack", "Apply signal attacks in sequence");
  att->add_option("--input", input, "WAV file or frame directory")->required();
  att->add_option("--attacks", attacks_opt, "Comma-separated list, e.g. awgn:30,lowpass:0.45")->required();
  att->add_option("--seed", seed, "Noise seed");
  att->add_option("--out", out, "Output WAV file or frame directory")->required();

  auto* tr = app.add_subcommand("trace", "Accuse code book rows from a pirate codeword");
  tr->add_option("--codebook", codebook, "Code book")->required();
  tr->add_option("--bits", bits_arg, "String or file of 0/1 (and '?' for erased)")->required();
  tr->add_option("--threshold", threshold, "Fixed threshold; omitted -> calibrated");

  auto* run = app.add_subcommand("run-scenario", "Run a full scenario and write the report");
  run->add_option("--config", config, "Scenario JSON")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Overrides the config seed");
  run->add_option("--attacks", attacks_opt, "Comma-separated attack list; overrides the config");

  auto* rep = app.add_subcommand("report", "Print the metrics CSV of a finished run");
  std::string run_dir;
  rep->add_option("--out,dir", run_dir, "Run directory")->required();

  app.add_flag("--verbose", verbose, "Progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  const bool deterministic = [] {
    const char* v = std::getenv("PSUM_DETERMINISTIC");
    return v && std::string(v) == "1";
  }();

  try {
    if (*gen) {
      const auto j = load_json_config(config);
      if (!j.is_object() || !j.contains("seed")) throw CliError{kExitConfig, "config: missing \"seed\""};
      const auto N = cfg_value<std::uint32_t>(j, "N", 8);
      const auto c = cfg_value<std::uint16_t>(j, "c", 3);
      const auto eps = cfg_value<double>(j, "epsilon", 0.01);
      const auto s = seed.value_or(cfg_value<std::uint64_t>(j, "seed", 0));
      std::string bias = cfg_value<std::string>(j, "bias", "");
      if (!bias.empty() && std::filesystem::path(bias).is_relative())
        bias = (std::filesystem::path(config).parent_path() / bias).string();
      psum_codebook* b = nullptr;
      const auto st = psum_codebook_generate(N, c, eps, s, bias.empty() ? nullptr : bias.c_str(), &b);
      if (st == PSUM_E_INVALID_ARGUMENT) check(PSUM_E_CONFIG, "gen-code");
      check(st, "gen-code");
      CodebookPtr book(b, psum_codebook_free);
      check(psum_codebook_save(book.get(), out.c_str()), "save codebook");
      if (verbose)
        std::cerr << "code book: N=" << psum_codebook_users(book.get()) << " m=" << psum_codebook_length(book.get())
                  << "\n";
      return kExitOk;
    }

    if (*part) {
      auto book = load_codebook(codebook);
      auto content = load_content(input);
      std::filesystem::create_directories(out);
      const auto bp = (std::filesystem::path(out) / "base.psb").string();
      const auto sp = (std::filesystem::path(out) / (psum_content_is_audio(content.get()) ? "sf.wav" : "sf.zip")).string();
      check(psum_partition(content.get(), levels, delta, psum_codebook_length(book.get()), bp.c_str(), sp.c_str()),
            "partition");
      std::cout << bp << "\n" << sp << "\n";
      return kExitOk;
    }

    if (*emb) {
      auto book = load_codebook(codebook);
      std::vector<uint8_t> row(psum_codebook_length(book.get()));
      check(psum_codebook_row(book.get(), user, row.data(), row.size()), "codebook row");
      psum_content* c = nullptr;
      check(psum_embed(base.c_str(), sf.c_str(), row.data(), row.size(), &c), "embed");
      ContentPtr content(c, psum_content_free);
      check(psum_content_save(content.get(), out.c_str()), "save " + out);
      return kExitOk;
    }

    if (*ext) {
      auto content = load_content(input);
      std::size_t n = 0;
      const auto st = psum_extract(content.get(), base.c_str(), gain ? 1 : 0, nullptr, 0, &n);
      if (st != PSUM_E_BUFFER_TOO_SMALL) check(st, "extract");
      std::vector<uint8_t> bits(n);
      check(psum_extract(content.get(), base.c_str(), gain ? 1 : 0, bits.data(), bits.size(), &n), "extract");
      write_text(out, bits_to_string(bits) + "\n");
      return kExitOk;
    }

    if (*att) {
      auto content = load_content(input);
      const auto list = split_list(attacks_opt);
      if (list.empty()) throw CliError{kExitConfig, "no attacks given"};
      std::uint64_t k = 0;
      for (const auto& a : list) {
        psum_content* next = nullptr;
        const auto st = psum_attack(content.get(), a.c_str(), seed.value_or(0) + k++, &next);
        check(st, "attack " + a);
        content.reset(next);
      }
      check(psum_content_save(content.get(), out.c_str()), "save " + out);
      return kExitOk;
    }

    if (*tr) {
      auto book = load_codebook(codebook);
      std::vector<int8_t> pc;
      for (char ch : read_text_or_literal(bits_arg)) {
        if (ch == '0') pc.push_back(0);
        else if (ch == '1') pc.push_back(1);
        else if (ch == '?') pc.push_back(-1);
        else if (!std::isspace(static_cast<unsigned char>(ch))) throw CliError{kExitConfig, "bits: unexpected character"};
      }
      std::vector<std::size_t> accused(psum_codebook_users(book.get()));
      std::size_t count = 0;
      double used = 0.0;
      check(psum_trace(book.get(), pc.data(), pc.size(), threshold, accused.data(), accused.size(), &count, &used),
            "trace");
      std::cout << "threshold " << used << "\naccused";
      for (std::size_t i = 0; i < count; ++i) std::cout << " " << accused[i];
      std::cout << "\n";
      return kExitOk;
    }

    if (*run) {
      psum_report* r = nullptr;
      check(psum_scenario_run(config.c_str(), seed ? 1 : 0, seed.value_or(0),
                              attacks_opt.empty() ? nullptr : attacks_opt.c_str(), verbose ? 1 : 0,
                              deterministic ? 1 : 0, &r),
            "run-scenario");
      std::unique_ptr<psum_report, decltype(&psum_report_free)> report(r, psum_report_free);
      check(psum_report_write(report.get(), out.c_str()), "write report");
      std::cout << psum_report_summary(report.get());
      return psum_report_passed(report.get()) ? kExitOk : kExitCheck;
    }

    if (*rep) {
      char* csv = nullptr;
      check(psum_report_csv(run_dir.c_str(), &csv), "report");
      std::cout << csv;
      psum_string_free(csv);
      return kExitOk;
    }
  } catch (const CliError& e) {
    std::cerr << "psum: " << e.msg << "\n";
    return e.code;
  }
  return kExitOk;
}
