#pragma once

#include <stdexcept>
#include <string>

namespace arctext {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kEmptyProposalSet,
  kDegenerateGeometry,
  kInvalidConfig,
  kParse,
  kIdMismatch,
  kIo,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace arctext
