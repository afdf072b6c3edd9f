#pragma once

#include <stdexcept>
#include <string>

namespace worldgen {

enum class ErrorKind {
  Domain,    // bad argument values (fov out of range, empty input, ...)
  Contract,  // internal invariant violated
  Config,    // unusable configuration / CLI arguments
  Io,        // file or wire format problems
  Oracle,    // oracle transport or server-side failure
  Stage,     // pipeline stage failed (e.g. insufficient overlap)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) raise(kind, msg);
}

}  // namespace worldgen
