#include "aqtriad/errors.hpp"

namespace aqtriad {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::UndefinedMetric: return "undefined metric";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Internal:
      return 4;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Schema:
    case ErrorKind::Alignment:
    case ErrorKind::Data:
    case ErrorKind::Training:
    case ErrorKind::UndefinedMetric:
      return 3;
  }
  return 4;
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace aqtriad
