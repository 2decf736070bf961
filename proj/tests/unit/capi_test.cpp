// Exercises the shared library through psum.h only.
#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "psum/psum.h"

namespace {

std::filesystem::path scratch(const char* name) {
  auto p = std::filesystem::temp_directory_path() / (std::string("psum_capi_") + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(CApi, CodeLengthAndErrors) {
  size_t m = 0;
  ASSERT_EQ(psum_code_length(100, 0.001, &m), PSUM_OK);
  EXPECT_EQ(m, 159u);
  EXPECT_EQ(psum_code_length(100, 2.0, &m), PSUM_E_INVALID_ARGUMENT);
  EXPECT_STRNE(psum_last_error(), "");
  EXPECT_STREQ(psum_version(), "0.1.0");
  EXPECT_NE(std::string(psum_status_string(PSUM_E_AUTH)), "");
}

TEST(CApi, EmbedExtractTrace) {
  const auto dir = scratch("flow");
  psum_codebook* book = nullptr;
  ASSERT_EQ(psum_codebook_generate(8, 3, 0.01, 42, nullptr, &book), PSUM_OK);
  const size_t m = psum_codebook_length(book);
  EXPECT_EQ(m, 93u);
  EXPECT_EQ(psum_codebook_users(book), 8u);
  const auto cb = (dir / "book.pcb").string();
  ASSERT_EQ(psum_codebook_save(book, cb.c_str()), PSUM_OK);
  psum_codebook* loaded = nullptr;
  ASSERT_EQ(psum_codebook_load(cb.c_str(), &loaded), PSUM_OK);

  psum_content* audio = nullptr;
  ASSERT_EQ(psum_content_synthetic_audio(1, 1.0, 44100, 2, &audio), PSUM_OK);
  EXPECT_EQ(psum_content_is_audio(audio), 1);
  const auto bf = (dir / "base.psb").string(), sf = (dir / "sf.wav").string();
  ASSERT_EQ(psum_partition(audio, 4, 0.25, m, bf.c_str(), sf.c_str()), PSUM_OK);

  std::vector<uint8_t> row(m);
  ASSERT_EQ(psum_codebook_row(loaded, 5, row.data(), row.size()), PSUM_OK);
  EXPECT_EQ(psum_codebook_row(loaded, 5, row.data(), 3), PSUM_E_BUFFER_TOO_SMALL);
  psum_content* copy = nullptr;
  ASSERT_EQ(psum_embed(bf.c_str(), sf.c_str(), row.data(), row.size(), &copy), PSUM_OK);

  double psnr = 0;
  ASSERT_EQ(psum_content_psnr(audio, copy, &psnr), PSUM_OK);
  EXPECT_GT(psnr, 18.0);

  size_t n = 0;
  EXPECT_EQ(psum_extract(copy, bf.c_str(), 0, nullptr, 0, &n), PSUM_E_BUFFER_TOO_SMALL);
  EXPECT_EQ(n, m);
  std::vector<uint8_t> bits(n);
  ASSERT_EQ(psum_extract(copy, bf.c_str(), 0, bits.data(), bits.size(), &n), PSUM_OK);
  EXPECT_EQ(bits, row);

  psum_content* noisy = nullptr;
  ASSERT_EQ(psum_attack(copy, "awgn:30", 3, &noisy), PSUM_OK);
  ASSERT_EQ(psum_extract(noisy, bf.c_str(), 0, bits.data(), bits.size(), &n), PSUM_OK);
  EXPECT_EQ(bits, row);
  psum_content* bad = nullptr;
  EXPECT_EQ(psum_attack(copy, "warble:3", 3, &bad), PSUM_E_CONFIG);

  std::vector<int8_t> pc(row.begin(), row.end());
  std::vector<size_t> accused(8);
  size_t count = 0;
  double thr = 0;
  ASSERT_EQ(psum_trace(loaded, pc.data(), pc.size(), 0.0, accused.data(), accused.size(), &count, &thr), PSUM_OK);
  ASSERT_EQ(count, 1u);
  EXPECT_EQ(accused[0], 5u);
  EXPECT_GT(thr, 0.0);

  const auto wav = (dir / "copy.wav").string();
  ASSERT_EQ(psum_content_save(copy, wav.c_str()), PSUM_OK);
  psum_content* back = nullptr;
  ASSERT_EQ(psum_content_load(wav.c_str(), &back), PSUM_OK);
  ASSERT_EQ(psum_extract(back, bf.c_str(), 0, bits.data(), bits.size(), &n), PSUM_OK);
  EXPECT_EQ(bits, row);

  psum_content_free(back);
  psum_content_free(noisy);
  psum_content_free(copy);
  psum_content_free(audio);
  psum_codebook_free(loaded);
  psum_codebook_free(book);
  std::filesystem::remove_all(dir);
}

TEST(CApi, MissingFilesAndNulls) {
  psum_codebook* book = nullptr;
  EXPECT_EQ(psum_codebook_load("/nonexistent/book", &book), PSUM_E_IO);
  EXPECT_EQ(book, nullptr);
  EXPECT_EQ(psum_codebook_generate(8, 3, 0.01, 1, nullptr, nullptr), PSUM_E_INVALID_ARGUMENT);
  psum_codebook_free(nullptr);
  psum_content_free(nullptr);
}

TEST(CApi, ScenarioRun) {
  const auto dir = scratch("scenario");
  psum_report* r = nullptr;
  ASSERT_EQ(psum_scenario_run(PSUM_CONFIG_DIR "/smoke.json", 0, 0, nullptr, 0, 1, &r), PSUM_OK);
  EXPECT_EQ(psum_report_passed(r), 1);
  EXPECT_NE(std::strstr(psum_report_summary(r), "PASS"), nullptr);
  ASSERT_EQ(psum_report_write(r, dir.string().c_str()), PSUM_OK);
  char* csv = nullptr;
  ASSERT_EQ(psum_report_csv(dir.string().c_str(), &csv), PSUM_OK);
  EXPECT_EQ(std::string(csv).rfind("buyer,attack,ber,nc,psnr", 0), 0u);
  psum_string_free(csv);
  psum_report_free(r);
  std::filesystem::remove_all(dir);
}
