#pragma once

#include <stdexcept>
#include <string>

namespace georabi {

inline constexpr const char* kVersion = "0.1.0";

// Error categories; the values double as process exit codes where that makes
// sense (config -> 2, validity -> 3, numeric -> 4).
enum class ErrorCode {
  config = 2,
  validity = 3,
  numeric = 4,
  usage = 5,
  degeneracy = 6,
  resolution = 7,
  model = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::config, w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorCode::numeric, w) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorCode::usage, w) {}
};

// A pair of eigenvalues closer than the degeneracy tolerance; the non-adiabatic
// coupling denominators are meaningless past this point.
struct DegeneracyError : Error {
  explicit DegeneracyError(const std::string& w) : Error(ErrorCode::degeneracy, w) {}
};

// Root counting changed under grid refinement.
struct ResolutionError : Error {
  explicit ResolutionError(const std::string& w) : Error(ErrorCode::resolution, w) {}
};

// Structural misuse: bad role map, wrong state counts, non-symmetric input.
struct ModelError : Error {
  explicit ModelError(const std::string& w) : Error(ErrorCode::model, w) {}
};

}  // namespace georabi
