#include <algorithm>
#include <fstream>

#include "psum/codes.hpp"
#include "psum/detail/binio.hpp"
#include "psum/error.hpp"

namespace psum::codes {

namespace {
constexpr char kMagic[8] = {'P', 'S', 'U', 'M', 'C', 'B', '1', '\0'};
}

CodeBook::CodeBook(CodeParams params, std::vector<double> bias, std::vector<std::uint8_t> bits)
    : params_(params), bias_(std::move(bias)), bits_(std::move(bits)) {
  params_.validate();
  require(!bias_.empty(), "CodeBook: empty code");
  if (bits_.size() != bias_.size() * params_.num_users) fail(Errc::length_mismatch, "CodeBook: matrix size mismatch");
  for (double p : bias_) require(p > 0.0 && p < 1.0, "CodeBook: bias outside (0,1)");
  for (auto b : bits_) require(b <= 1, "CodeBook: non-binary entry");
}

std::span<const std::uint8_t> CodeBook::codeword(std::size_t user) const {
  require(user < num_users(), "CodeBook: user index out of range");
  return std::span<const std::uint8_t>(bits_).subspan(user * length(), length());
}

CodeBook generate_code(const CodeParams& params) {
  return generate_code(params, BiasDistribution::tardos_default(params.coalition_bound));
}

CodeBook generate_code(const CodeParams& params, const BiasDistribution& dist) {
  params.validate();
  const std::size_t m = code_length(params.num_users, params.error_prob);
  Rng rng(params.seed);
  const double t = dist.cutoff();
  std::vector<double> bias(m);
  for (auto& p : bias) p = std::clamp(dist.sample(rng), t, 1.0 - t);

  std::vector<std::uint8_t> bits(static_cast<std::size_t>(params.num_users) * m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < params.num_users; ++i)
    for (std::size_t j = 0; j < m; ++j) bits[i * m + j] = u(rng) < bias[j] ? 1 : 0;
  return CodeBook(params, std::move(bias), std::move(bits));
}

void CodeBook::save(std::ostream& out) const {
  using detail::put_le;
  detail::put_magic(out, kMagic);
  put_le<std::uint32_t>(out, params_.num_users);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(length()));
  put_le<std::uint16_t>(out, params_.coalition_bound);
  put_le<std::uint64_t>(out, params_.seed);
  put_le<double>(out, params_.error_prob);
  for (double p : bias_) put_le<double>(out, p);
  const std::size_t row_bytes = (length() + 7) / 8;
  std::vector<char> row(row_bytes);
  for (std::size_t i = 0; i < num_users(); ++i) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t j = 0; j < length(); ++j)
      if (bit(i, j)) row[j / 8] = static_cast<char>(row[j / 8] | (1u << (j % 8)));
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(Errc::io, "CodeBook: write failed");
}

void CodeBook::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + path.string());
  save(out);
}

CodeBook CodeBook::load(std::istream& in) {
  using detail::get_le;
  detail::expect_magic(in, kMagic, "CodeBook");
  CodeParams params;
  params.num_users = get_le<std::uint32_t>(in);
  const auto m = get_le<std::uint32_t>(in);
  params.coalition_bound = get_le<std::uint16_t>(in);
  params.seed = get_le<std::uint64_t>(in);
  params.error_prob = get_le<double>(in);
  if (m == 0 || params.num_users == 0) fail(Errc::format, "CodeBook: empty dimensions");
  std::vector<double> bias(m);
  for (auto& p : bias) p = get_le<double>(in);
  const std::size_t row_bytes = (m + 7) / 8;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(params.num_users) * m);
  std::vector<char> row(row_bytes);
  for (std::size_t i = 0; i < params.num_users; ++i) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row_bytes))) fail(Errc::format, "CodeBook: truncated rows");
    for (std::size_t j = 0; j < m; ++j) bits[i * m + j] = (static_cast<std::uint8_t>(row[j / 8]) >> (j % 8)) & 1u;
  }
  return CodeBook(params, std::move(bias), std::move(bits));
}

CodeBook CodeBook::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return load(in);
}

}  // namespace psum::codes
