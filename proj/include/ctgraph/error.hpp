#pragma once

#include <stdexcept>
#include <string>

namespace ctgraph {

// Process exit codes used by the CLI. Every library exception maps to one.
enum class ExitCode : int {
  kSuccess = 0,
  kConfig = 2,
  kNumeric = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Invalid arguments, shape mismatches, bad configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

// Degenerate spectra, NaN losses.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kNumeric, what) {}
};

// Distinct failure reasons for the binary file readers.
enum class FormatErrc {
  kOpenFailed,
  kBadMagic,
  kVersionMismatch,
  kTruncatedHeader,
  kTruncatedPayload,
  kWriteFailed,
  kBadHeader,
};

inline const char* to_string(FormatErrc e) {
  switch (e) {
    case FormatErrc::kOpenFailed: return "open failed";
    case FormatErrc::kBadMagic: return "bad magic";
    case FormatErrc::kVersionMismatch: return "version mismatch";
    case FormatErrc::kTruncatedHeader: return "truncated header";
    case FormatErrc::kTruncatedPayload: return "truncated payload";
    case FormatErrc::kWriteFailed: return "write failed";
    case FormatErrc::kBadHeader: return "bad header";
  }
  return "unknown";
}

class FormatError : public Error {
 public:
  FormatError(FormatErrc errc, const std::string& path)
      : Error(ExitCode::kIo, std::string(to_string(errc)) + ": " + path), errc_(errc) {}

  FormatErrc errc() const noexcept { return errc_; }

 private:
  FormatErrc errc_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace ctgraph
