#pragma once

#include <stdexcept>
#include <string>

namespace aqtriad {

/// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Parse,
  Validation,
  Schema,
  Argument,
  Config,
  Alignment,
  Data,
  Training,
  UndefinedMetric,
  Io,
  Internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// 2 for argument/config problems, 3 for data problems, 4 for internal ones.
int exit_code_for(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace aqtriad
