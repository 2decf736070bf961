#include <cmath>

#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

std::vector<std::size_t> select_keyframes(const FrameContent& content, double threshold_factor) {
  content.validate();
  require(threshold_factor >= 0.0, "select_keyframes: negative threshold factor");
  const auto& frames = content.frames;
  std::vector<double> diffs(frames.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto& a = frames[k].y.data;
    const auto& b = frames[k - 1].y.data;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    diffs[k] = s / static_cast<double>(a.size());
    total += diffs[k];
  }
  const double mean = frames.size() > 1 ? total / static_cast<double>(frames.size() - 1) : 0.0;
  std::vector<std::size_t> keys{0};
  for (std::size_t k = 1; k < frames.size(); ++k)
    if (diffs[k] > threshold_factor * mean) keys.push_back(k);
  return keys;
}

}  // namespace psum::transform
