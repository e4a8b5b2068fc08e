#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divseq {

enum class ErrorKind {
  ZeroInput,
  NegativeWithoutSign,
  BasisExceeded,
  FactorLimit,
  BasisMismatch,
  InvalidArgument,
  InvalidParams,
  DomainViolation,
  SizeGuard,
  MissingComponentOfOne,
  InvalidCertificate,
  SchemaVersionMismatch,
  CorruptCertificate,
  ParseError,
  Internal,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind; the
// CLI maps kinds onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace divseq
