#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace scopt {

namespace detail {

inline std::string format_real(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace detail

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error
{
public:
    /// `pivot` is the zero-based column at which the Cholesky recurrence failed.
    explicit NotPositiveDefinite(std::size_t pivot)
        : Error("matrix is not positive definite (failed at pivot " + std::to_string(pivot) + ")"),
          pivot_(pivot)
    {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class NonSquareLength : public Error
{
public:
    explicit NonSquareLength(std::size_t length)
        : Error("vector length " + std::to_string(length) + " is not a perfect square")
    {}
};

class AsymmetricInput : public Error
{
public:
    explicit AsymmetricInput(double deviation)
        : Error("input is not symmetric (max deviation " + detail::format_real(deviation) + ")"),
          deviation_(deviation)
    {}

    double deviation() const noexcept { return deviation_; }

private:
    double deviation_;
};

class DimensionMismatch : public Error
{
public:
    using Error::Error;
};

class EmptySampleSet : public Error
{
public:
    EmptySampleSet() : Error("sample set is empty") {}
};

class SparsityTooLowForPD : public Error
{
public:
    SparsityTooLowForPD(std::size_t requested_k, std::size_t n)
        : Error("requested " + std::to_string(requested_k) + " nonzeros but a positive-definite "
                + std::to_string(n) + "x" + std::to_string(n) + " matrix needs at least "
                + std::to_string(n))
    {}
};

class InvalidArgument : public Error
{
public:
    using Error::Error;
};

class MaxInnerIterations : public Error
{
public:
    MaxInnerIterations(std::size_t iterations, double gap_bound, double eps)
        : Error("inner solver hit " + std::to_string(iterations) + " iterations with certified gap "
                + detail::format_real(gap_bound) + " > eps " + detail::format_real(eps)),
          gap_bound_(gap_bound)
    {}

    double gap_bound() const noexcept { return gap_bound_; }

private:
    double gap_bound_;
};

class DecrementBelowNoise : public Error
{
public:
    DecrementBelowNoise(double decrement, double noise)
        : Error("Newton decrement " + detail::format_real(decrement) + " below inexactness level "
                + detail::format_real(noise))
    {}
};

class OmegaStarDomain : public Error
{
public:
    explicit OmegaStarDomain(double t)
        : Error("omega_star argument " + detail::format_real(t) + " outside [0, 1)")
    {}
};

class NotPositiveDefiniteStart : public Error
{
public:
    NotPositiveDefiniteStart() : Error("starting point is not positive definite") {}
};

class Infeasible : public Error
{
public:
    using Error::Error;
};

class NotConverged : public Error
{
public:
    NotConverged(std::size_t iterations, double residual)
        : Error("not converged after " + std::to_string(iterations) + " iterations (residual "
                + detail::format_real(residual) + ")"),
          residual_(residual)
    {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class MalformedCsv : public Error
{
public:
    MalformedCsv(std::size_t line, const std::string& what)
        : Error("malformed CSV at line " + std::to_string(line) + ": " + what), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class TooFewDates : public Error
{
public:
    explicit TooFewDates(std::size_t count)
        : Error("need at least 2 dates, got " + std::to_string(count))
    {}
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace scopt
