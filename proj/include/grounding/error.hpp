#ifndef GROUNDING_ERROR_HPP
#define GROUNDING_ERROR_HPP

#include <stdexcept>
#include <string>

namespace grounding {

enum class ErrorKind {
  InvalidArgument,
  Io,
  Parse,
  Schema,
  Numeric,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace grounding

#endif
