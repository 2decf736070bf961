#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "psum/codes.hpp"
#include "psum/error.hpp"

namespace psum::codes {

BiasDistribution BiasDistribution::arcsine(double cutoff) {
  require(cutoff > 0.0 && cutoff < 0.5, "arcsine bias: cutoff must lie in (0, 1/2)");
  return BiasDistribution(Arcsine{cutoff});
}

BiasDistribution BiasDistribution::tardos_default(unsigned coalition_bound) {
  require(coalition_bound >= 1, "tardos_default: coalition_bound must be >= 1");
  return arcsine(1.0 / (300.0 * coalition_bound));
}

BiasDistribution BiasDistribution::discrete(std::vector<double> support, std::vector<double> weights) {
  require(!support.empty(), "discrete bias: empty support");
  require(support.size() == weights.size(), "discrete bias: support/weights size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    require(support[i] > 0.0 && support[i] < 1.0, "discrete bias: support values must lie in (0,1)");
    require(weights[i] >= 0.0, "discrete bias: negative weight");
    total += weights[i];
  }
  require(total > 0.0, "discrete bias: weights sum to zero");
  for (double& w : weights) w /= total;
  return BiasDistribution(Discrete{std::move(support), std::move(weights)});
}

BiasDistribution BiasDistribution::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open bias file " + path.string());
  std::vector<double> support, weights;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double p = 0.0, w = 0.0;
    if (!(ls >> p)) continue;
    if (!(ls >> w)) fail(Errc::format, "bias file: missing weight in line '" + line + "'");
    support.push_back(p);
    weights.push_back(w);
  }
  return discrete(std::move(support), std::move(weights));
}

double BiasDistribution::sample(Rng& rng) const {
  if (const auto* a = std::get_if<Arcsine>(&repr_)) {
    const double lo = std::asin(std::sqrt(a->cutoff));
    const double hi = std::numbers::pi / 2.0 - lo;
    std::uniform_real_distribution<double> u(lo, hi);
    const double s = std::sin(u(rng));
    return s * s;
  }
  const auto& d = std::get<Discrete>(repr_);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (std::size_t i = 0; i + 1 < d.support.size(); ++i) {
    if (x < d.weights[i]) return d.support[i];
    x -= d.weights[i];
  }
  return d.support.back();
}

double BiasDistribution::cutoff() const {
  if (const auto* a = std::get_if<Arcsine>(&repr_)) return a->cutoff;
  const auto& d = std::get<Discrete>(repr_);
  double t = 0.5;
  for (double p : d.support) t = std::min({t, p, 1.0 - p});
  return t;
}

}  // namespace psum::codes
