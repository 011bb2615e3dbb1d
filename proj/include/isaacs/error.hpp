#pragma once

#include <stdexcept>
#include <string>

namespace isaacs {

/// Raised when a coefficient, solver or scheme produces a non-finite or
/// otherwise unusable number.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A monotonicity (CFL) or stencil-positivity condition does not hold.
class MonotonicityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An enumeration would exceed its configured candidate budget.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, double required, double budget)
        : std::runtime_error(what), required_(required), budget_(budget) {}
    double required() const { return required_; }
    double budget() const { return budget_; }

private:
    double required_;
    double budget_;
};

/// Malformed experiment configuration; carries a 1-based position when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                                            std::to_string(column) + ")"
                                      : what),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace isaacs
