#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvkmf {

enum class ErrorKind {
  NonFinite,
  BadParam,
  ZeroDiagonal,
  DimensionMismatch,
  AsymmetricKernel,
  TooFewPoints,
  LengthMismatch,
  ParseError,
  MissingFile,
  CorruptHeader,
  TruncatedData,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::BadParam: return "BadParam";
    case ErrorKind::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AsymmetricKernel: return "AsymmetricKernel";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::CorruptHeader: return "CorruptHeader";
    case ErrorKind::TruncatedData: return "TruncatedData";
  }
  return "Unknown";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace mvkmf
