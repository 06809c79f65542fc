#pragma once

#include <stdexcept>
#include <string>

namespace rwre {

// Numeric values mirror rwre_status in include/rwre/rwre.h.
enum class ErrorCode : int {
  kParse = 1,
  kInvalidArgument = 2,
  kPrecondition = 3,
  kOutOfRange = 4,
  kNotConverged = 5,
  kNoRoot = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace rwre
