#ifndef ARACL_ERRORS_HPP_
#define ARACL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace aracl {

// Error taxonomy mirrored by the CLI exit codes: config 2, data 3, numeric 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a rejection loop exhausts its proposal budget with nothing
// accepted. Carries the proposal count so operators can see the collapse.
class BudgetExhausted : public NumericError {
 public:
  BudgetExhausted(const std::string& msg, long long proposals)
      : NumericError(msg), proposals_used(proposals) {}
  long long proposals_used;
};

}  // namespace aracl

#endif  // ARACL_ERRORS_HPP_
