#pragma once

#include <stdexcept>
#include <string>

namespace hpfolio {

/// Domain error; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace hpfolio
