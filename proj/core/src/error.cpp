#include "evofs/error.hpp"

namespace evofs {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kData: return "data";
    case ErrorKind::kStratification: return "stratification";
    case ErrorKind::kMetrics: return "metrics";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kSchema:
    case ErrorKind::kParse:
    case ErrorKind::kData:
    case ErrorKind::kStratification:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kMetrics:
      return 3;
  }
  return 3;
}

}  // namespace evofs
