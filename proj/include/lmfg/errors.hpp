#pragma once

#include <stdexcept>
#include <string>

namespace lmfg {

enum class ErrorKind {
    invalid_argument,
    grid_mismatch,
    resolution,
    quadrature,
    unsupported,
    divergence,
    instability,
    budget,
    config,
    size_guard,
};

/// Base of every library error. The kind is what the CLI maps to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Grid too coarse for a requested kernel; carries the smallest adequate n.
class ResolutionError : public Error {
public:
    ResolutionError(const std::string& what, int required_n)
        : Error(ErrorKind::resolution, what), required_n_(required_n) {}

    int required_n() const noexcept { return required_n_; }

private:
    int required_n_;
};

/// Blow-up in a time stepper. Slice index is in physical-time order.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int last_stable_slice)
        : Error(ErrorKind::divergence, what), last_stable_(last_stable_slice) {}

    int last_stable_slice() const noexcept { return last_stable_; }

private:
    int last_stable_;
};

inline void require(bool cond, const std::string& what,
                    ErrorKind kind = ErrorKind::invalid_argument) {
    if (!cond) throw Error(kind, what);
}

}  // namespace lmfg
