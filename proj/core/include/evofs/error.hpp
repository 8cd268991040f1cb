#pragma once

#include <stdexcept>
#include <string>

namespace evofs {

enum class ErrorKind {
  kUsage,           // caller violated a documented precondition
  kConfig,          // invalid configuration value
  kSchema,          // CSV header / column layout problem
  kParse,           // malformed input file
  kData,            // data unusable after cleaning
  kStratification,  // class too small to split
  kMetrics,         // metrics over an empty confusion matrix
  kIo,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 1 usage/config, 2 data, 3 internal.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace evofs
