#pragma once

#include <stdexcept>
#include <string>

namespace cdrs {

/// Thrown when a caller breaks a documented precondition (shape, range, ordering).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A computation produced NaN/Inf.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The ratio model scores every burn-in draw as zero, so rejection sampling cannot terminate.
class DegenerateModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or truncated persisted data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ContractViolation(message);
}

}  // namespace cdrs
