#pragma once

#include <stdexcept>
#include <string>

namespace nlr {

// Error categories shared by the whole engine. The numeric codes double as
// CLI exit codes and C-API status values.
enum class ErrorCode : int {
  config = 1,    // invalid configuration, bad arguments, shape mismatch at build time
  io = 2,        // dataset / file problems
  internal = 3,  // broken invariant, non-finite values, logic errors
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::config, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorCode::io, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorCode::internal, msg); }

}  // namespace nlr
