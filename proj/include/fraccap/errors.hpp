#pragma once

#include <stdexcept>
#include <string>

namespace fraccap {

/// Argument outside the domain of an operation (non-positive frequency,
/// time before the profile start, invalid parameter ranges).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The series resistor drops the whole voltage window: 2 I0 Rs >= dV.
class ResistiveWindowExhausted : public std::runtime_error {
public:
    ResistiveWindowExhausted(double current, double delta_v, double r_s);

    double current() const noexcept { return current_; }
    /// Current at which capacity reaches zero, dV / (2 Rs).
    double intercept_current() const noexcept { return intercept_current_; }

private:
    double current_;
    double intercept_current_;
};

/// alpha = 1 makes the terminating-capacitor formula divide by zero.
class DegenerateNetwork : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InsufficientBranches : public std::invalid_argument {
public:
    InsufficientBranches(int n_half, int minimum_n_half);

    int minimum_n_half() const noexcept { return minimum_n_half_; }

private:
    int minimum_n_half_;
};

class UnstableTimeStep : public std::invalid_argument {
public:
    UnstableTimeStep(double dt, double tau_min);
};

/// A fit whose data contradicts the model (wrong-signed slope, too few points,
/// invalid extrapolation).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace fraccap
