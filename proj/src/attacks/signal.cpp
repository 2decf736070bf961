#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "psum/attacks.hpp"
#include "psum/error.hpp"
#include "psum/rng.hpp"

namespace psum::attacks {

using Kind = AttackSpec::Kind;

void AttackSpec::validate() const {
  switch (kind) {
    case Kind::none: break;
    case Kind::awgn: require(std::isfinite(snr_db), "awgn: snr must be finite"); break;
    case Kind::scale: require(std::isfinite(scale) && scale > 0.0, "scale: factor must be positive"); break;
    case Kind::requantize: require(bits >= 2 && bits <= 32, "requantize: bits in [2, 32]"); break;
    case Kind::resample: require(ratio > 0.0 && ratio <= 4.0, "resample: ratio in (0, 4]"); break;
    case Kind::lowpass:
    case Kind::highpass:
      require(cutoff > 0.0 && cutoff < 1.0, "filter: cutoff is a fraction of Nyquist in (0, 1)");
      require(taps % 2 == 1 && taps >= 3, "filter: odd tap count >= 3");
      break;
    case Kind::echo:
      require(echo_delay > 0.0, "echo: delay must be positive");
      require(std::abs(echo_decay) < 1.0, "echo: |decay| < 1");
      break;
  }
}

std::string AttackSpec::name() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::none: return "none";
    case Kind::awgn: s << "awgn:" << snr_db; break;
    case Kind::scale: s << "scale:" << scale; break;
    case Kind::requantize: s << "requantize:" << bits; break;
    case Kind::resample: s << "resample:" << ratio; break;
    case Kind::lowpass: s << "lowpass:" << cutoff; break;
    case Kind::highpass: s << "highpass:" << cutoff; break;
    case Kind::echo: s << "echo:" << echo_delay << ":" << echo_decay; break;
  }
  return s.str();
}

AttackSpec AttackSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) fail(Errc::config, "empty attack spec");
  auto num = [&](std::size_t i, double def) {
    if (i >= parts.size()) return def;
    try {
      std::size_t used = 0;
      double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(Errc::config, "bad number in attack spec: " + text);
    }
  };
  AttackSpec a;
  const auto& k = parts[0];
  if (k == "none") a.kind = Kind::none;
  else if (k == "awgn") a.kind = Kind::awgn, a.snr_db = num(1, 30.0);
  else if (k == "scale") a.kind = Kind::scale, a.scale = num(1, 1.1);
  else if (k == "requantize") a.kind = Kind::requantize, a.bits = static_cast<int>(num(1, 16));
  else if (k == "resample") a.kind = Kind::resample, a.ratio = num(1, 0.5);
  else if (k == "lowpass") a.kind = Kind::lowpass, a.cutoff = num(1, 0.45);
  else if (k == "highpass") a.kind = Kind::highpass, a.cutoff = num(1, 0.05);
  else if (k == "echo") a.kind = Kind::echo, a.echo_delay = num(1, 0.05), a.echo_decay = num(2, 0.3);
  else fail(Errc::config, "unknown attack: " + k);
  const std::size_t max_parts = a.kind == Kind::none ? 1 : a.kind == Kind::echo ? 3 : 2;
  if (parts.size() > max_parts) fail(Errc::config, "too many fields in attack spec: " + text);
  try {
    a.validate();
  } catch (const Error& e) {
    fail(Errc::config, e.what());
  }
  return a;
}

std::vector<double> lowpass_taps(double cutoff, std::size_t taps) {
  require(taps % 2 == 1 && cutoff > 0.0 && cutoff < 1.0, "lowpass_taps: odd length, cutoff in (0, 1)");
  const double m = static_cast<double>(taps - 1) / 2.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps; ++k) {
    const double t = static_cast<double>(k) - m;
    const double x = std::numbers::pi * cutoff * t;
    const double sinc = t == 0.0 ? cutoff : std::sin(x) / (std::numbers::pi * t);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(taps - 1));
    h[k] = sinc * w;
    sum += h[k];
  }
  for (auto& v : h) v /= sum;
  return h;
}

namespace {

// Zero-phase FIR with half-sample symmetric extension at both ends.
std::vector<double> convolve_same(std::span<const double> x, const std::vector<double>& h) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto m = static_cast<std::ptrdiff_t>(h.size() / 2);
  auto at = [&](std::ptrdiff_t i) {
    if (n == 1) return x[0];
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? x[static_cast<std::size_t>(i)] : x[static_cast<std::size_t>(period - 1 - i)];
  };
  std::vector<double> y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -m; k <= m; ++k) acc += h[static_cast<std::size_t>(k + m)] * at(i - k);
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> linear_resample(std::span<const double> x, std::size_t out_len) {
  std::vector<double> y(out_len);
  if (x.empty() || out_len == 0) return y;
  if (x.size() == 1 || out_len == 1) {
    std::fill(y.begin(), y.end(), x[0]);
    return y;
  }
  const double step = static_cast<double>(x.size() - 1) / static_cast<double>(out_len - 1);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto j = std::min(static_cast<std::size_t>(pos), x.size() - 2);
    const double frac = pos - static_cast<double>(j);
    y[i] = (1.0 - frac) * x[j] + frac * x[j + 1];
  }
  return y;
}

double grid_quantize(double x, int bits) {
  const double q = std::ldexp(1.0, bits - 1);
  const double v = std::round(x * q);
  return std::clamp(v, -q, q - 1.0) / q;
}

// Per-channel attack with shared noise generator so multichannel AWGN uses
// one SNR over the whole signal.
std::vector<double> attack_channel(std::span<const double> x, double fs, const AttackSpec& spec, double noise_sigma,
                                   Rng& rng) {
  std::vector<double> y(x.begin(), x.end());
  switch (spec.kind) {
    case Kind::none: break;
    case Kind::awgn: {
      std::normal_distribution<double> g(0.0, noise_sigma);
      for (auto& v : y) v += g(rng);
      break;
    }
    case Kind::scale:
      for (auto& v : y) v *= spec.scale;
      break;
    case Kind::requantize:
      for (auto& v : y) v = grid_quantize(v, spec.bits);
      break;
    case Kind::resample: {
      const auto mid = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * spec.ratio)));
      y = linear_resample(linear_resample(x, mid), x.size());
      break;
    }
    case Kind::lowpass: y = convolve_same(x, lowpass_taps(spec.cutoff, spec.taps)); break;
    case Kind::highpass: {
      const auto lp = convolve_same(x, lowpass_taps(spec.cutoff, spec.taps));
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - lp[i];
      break;
    }
    case Kind::echo: {
      require(fs > 0.0, "echo: sample rate required");
      const auto d = static_cast<std::size_t>(std::llround(spec.echo_delay * fs));
      for (std::size_t i = d; i < y.size(); ++i) y[i] += spec.echo_decay * x[i - d];
      break;
    }
  }
  return y;
}

double noise_sigma_for(std::span<const std::span<const double>> channels, double snr_db) {
  double power = 0.0;
  std::size_t count = 0;
  for (auto c : channels) {
    for (double v : c) power += v * v;
    count += c.size();
  }
  if (count == 0) return 0.0;
  power /= static_cast<double>(count);
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

}  // namespace

std::vector<double> apply_signal_attack(std::span<const double> signal, double sample_rate, const AttackSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0xA77AC4);
  const std::span<const double> chans[] = {signal};
  const double sigma = spec.kind == Kind::awgn ? noise_sigma_for(chans, spec.snr_db) : 0.0;
  return attack_channel(signal, sample_rate, spec, sigma, rng);
}

transform::Content apply_signal_attack(const transform::Content& content, const AttackSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0xA77AC4);
  if (const auto* a = std::get_if<transform::AudioContent>(&content)) {
    a->validate();
    std::vector<std::span<const double>> chans(a->channels.begin(), a->channels.end());
    const double sigma = spec.kind == Kind::awgn ? noise_sigma_for(chans, spec.snr_db) : 0.0;
    transform::AudioContent out;
    out.sample_rate = a->sample_rate;
    for (const auto& ch : a->channels) out.channels.push_back(attack_channel(ch, a->sample_rate, spec, sigma, rng));
    return out;
  }
  const auto& fc = std::get<transform::FrameContent>(content);
  fc.validate();
  if (spec.kind != Kind::none && spec.kind != Kind::awgn && spec.kind != Kind::scale && spec.kind != Kind::requantize)
    fail(Errc::invalid_argument, "attack " + spec.name() + " is not defined for frames");
  std::vector<std::span<const double>> planes;
  for (const auto& f : fc.frames) planes.emplace_back(f.y.data);
  const double sigma = spec.kind == Kind::awgn ? noise_sigma_for(planes, spec.snr_db) : 0.0;
  transform::FrameContent out = fc;
  for (auto& f : out.frames) {
    if (spec.kind == Kind::requantize) {
      // Pixel planes live on [0, 255]; b bits -> 2^b levels over that range.
      const double step = 256.0 / std::ldexp(1.0, spec.bits);
      for (auto& v : f.y.data) v = std::clamp(std::floor(v / step) * step, 0.0, 255.0);
    } else {
      f.y.data = attack_channel(f.y.data, fc.fps, spec, sigma, rng);
    }
  }
  return out;
}

}  // namespace psum::attacks
