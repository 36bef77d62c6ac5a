#pragma once

#include <stdexcept>
#include <string>

namespace losp {

/// Violated input contract (bad parameter, unsupported strategy, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested object does not fit in memory / index space.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A root finder could not bracket its target.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative or Monte Carlo procedure ran out of its budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double lo = 0.0, double hi = 0.0)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  // Partial bracket reached before the budget ran out.
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace losp
