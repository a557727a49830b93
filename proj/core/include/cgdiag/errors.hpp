#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cgdiag {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported Matrix Market input.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on a scalar argument was violated (nonpositive delta, mu, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Nonpositive curvature in CG/PCG. Downstream estimators assume gamma, delta > 0.
class BreakdownError : public Error {
public:
    enum class Kind { matrix_not_spd, preconditioner_not_spd };

    BreakdownError(Kind kind, std::size_t iteration, double value)
        : Error(describe(kind, iteration, value)), kind_(kind), iteration_(iteration), value_(value) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t iteration() const noexcept { return iteration_; }
    double value() const noexcept { return value_; }

private:
    static std::string describe(Kind kind, std::size_t iteration, double value) {
        std::string what = kind == Kind::matrix_not_spd ? "p^T A p" : "z^T r";
        return "CG breakdown at iteration " + std::to_string(iteration) + ": " + what +
               " = " + std::to_string(value) + " is not positive";
    }

    Kind kind_;
    std::size_t iteration_;
    double value_;
};

/// Nonpositive pivot in the zero-fill incomplete Cholesky factorization.
class PivotError : public Error {
public:
    PivotError(std::size_t index, double pivot)
        : Error("incomplete Cholesky pivot " + std::to_string(index) + " is " + std::to_string(pivot)),
          index_(index), pivot_(pivot) {}

    /// Zero-based row index of the failing pivot.
    std::size_t index() const noexcept { return index_; }
    double pivot() const noexcept { return pivot_; }

private:
    std::size_t index_;
    double pivot_;
};

/// Zero denominator in the Gauss-Radau coefficient recurrence.
class DegenerateNodeError : public Error {
public:
    explicit DegenerateNodeError(std::size_t k)
        : Error("Gauss-Radau recurrence has a zero denominator at k = " + std::to_string(k)), k_(k) {}

    std::size_t k() const noexcept { return k_; }

private:
    std::size_t k_;
};

/// Dense reference computation failed or the problem exceeds the verify limit.
class OracleError : public Error {
public:
    using Error::Error;
};

}  // namespace cgdiag
