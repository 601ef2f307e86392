#pragma once

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

namespace slespec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point outside an operation's parameter domain (invalid curve point,
/// negative kappa, l out of range, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// (q, kappa) lies beyond q = (kappa+4)^2 / (8 kappa); the gamma quadratic has
/// no real root there.
class NoRealGamma : public Error {
public:
    using Error::Error;
};

/// Non-finite value while building a float table.
class TableOverflow : public Error {
public:
    TableOverflow(int i, int j)
        : Error("theta table overflow at (" + std::to_string(i) + ", " +
                std::to_string(j) + ")"),
          i_(i), j_(j) {}
    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_;
    int j_;
};

/// The truncated series is not converged at the requested radius.
class TailCheckFailed : public Error {
public:
    TailCheckFailed(double r, double tail, double max_r)
        : Error(message(r, tail, max_r)),
          r_(r), tail_(tail), max_r_(max_r) {}
    double radius() const noexcept { return r_; }
    double tail() const noexcept { return tail_; }
    double max_admissible_radius() const noexcept { return max_r_; }

private:
    static std::string message(double r, double tail, double max_r) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "series tail %.3g at r=%.9g exceeds tolerance; max admissible r for this "
                      "order is %.9g",
                      tail, r, max_r);
        return buf;
    }

    double r_;
    double tail_;
    double max_r_;
};

/// Iterative method failed to converge or could not certify its result.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Underflow of the adaptive step while integrating next to the driving point.
class StepUnderflow : public Error {
public:
    using Error::Error;
};

/// Numerical stencil leaves the domain of the evaluated function.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace slespec
