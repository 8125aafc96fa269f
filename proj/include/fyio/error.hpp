#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fyio {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NegativeCycle : public Error {
public:
    NegativeCycle() : Error("negative-cost cycle reachable from the source") {}
};

class Unreachable : public Error {
public:
    Unreachable() : Error("sink is not reachable from the source") {}
};

/// Frank-Wolfe projection stopped at max_iters with the gap still above tolerance.
class NonConvergence : public Error {
public:
    explicit NonConvergence(double final_gap)
        : Error("projection did not converge, final gap " + std::to_string(final_gap)),
          final_gap_(final_gap) {}
    double final_gap() const { return final_gap_; }

private:
    double final_gap_;
};

class Diverged : public Error {
public:
    explicit Diverged(std::size_t iteration)
        : Error("parameter norm exceeded the divergence guard at iteration " +
                std::to_string(iteration)),
          iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

class UnsupportedRegion : public Error {
public:
    using Error::Error;
};

/// Every Nadaraya-Watson weight underflowed; the bandwidth is too small.
class DegenerateKernel : public Error {
public:
    DegenerateKernel() : Error("all kernel weights underflowed (bandwidth too small)") {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace fyio
