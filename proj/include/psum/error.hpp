#pragma once

#include <stdexcept>
#include <string>

namespace psum {

enum class Errc {
  invalid_argument = 1,
  length_mismatch,
  io,
  format,
  auth_failure,
  oversize,
  nonce_reuse,
  protocol_abort,
  config,
};

// Single exception type for the library; the C API maps `code()` onto
// psum_status values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(Errc::invalid_argument, what);
}

}  // namespace psum
