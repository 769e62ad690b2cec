#ifndef MBC_ERRORS_HPP_
#define MBC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mbc {

// Invalid configuration (bad shapes, unknown variant, schema mismatch).
// CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data (out-of-range id, malformed CSV row budget exceeded).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint file problems. `kind` distinguishes the failure modes.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kCorrupt, kVersionMismatch, kSchemaMismatch };
  CheckpointError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// AUC is undefined on single-class inputs; surfaced loudly, never as 0.5.
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace mbc

#endif  // MBC_ERRORS_HPP_
