#pragma once

#include <stdexcept>
#include <string>

namespace qcert {

// Input failed a structural or numeric precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative routine did not converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested parameters lie outside the feasible region of a construction.
class InfeasibleError : public std::domain_error {
 public:
  InfeasibleError(const std::string& what, double max_feasible)
      : std::domain_error(what), max_feasible_(max_feasible) {}
  double max_feasible() const { return max_feasible_; }

 private:
  double max_feasible_;
};

// The construction does not exist for this input (e.g. no bucket has two entries).
class UnavailableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A copy source ran out of copies.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A likelihood ratio is infinite because the null assigns zero probability.
class UndefinedOutcome : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Parameters outside the range an exact oracle supports (e.g. d < l for Weingarten values).
class UnsupportedRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace qcert
