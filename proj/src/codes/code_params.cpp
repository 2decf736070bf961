#include <cmath>
#include <string>

#include "psum/codes.hpp"
#include "psum/error.hpp"

namespace psum::codes {

void CodeParams::validate() const {
  require(num_users >= 1, "CodeParams: num_users must be >= 1");
  require(coalition_bound >= 1, "CodeParams: coalition_bound must be >= 1");
  require(error_prob > 0.0 && error_prob < 1.0, "CodeParams: error_prob must lie in (0,1)");
  require(error_prob < static_cast<double>(num_users), "CodeParams: error_prob must be < num_users");
}

std::size_t code_length(std::uint64_t num_users, double error_prob) {
  require(num_users >= 1, "code_length: num_users must be >= 1");
  require(error_prob > 0.0 && error_prob < 1.0, "code_length: error_prob must lie in (0,1)");
  require(error_prob < static_cast<double>(num_users), "code_length: error_prob must be < num_users");
  const long double x =
      (std::log(static_cast<long double>(num_users)) - std::log(static_cast<long double>(error_prob))) /
      kAlpha0;
  const long double m = std::ceil(x);
  require(m >= 1.0L, "code_length: non-positive length");
  return static_cast<std::size_t>(m);
}

}  // namespace psum::codes
