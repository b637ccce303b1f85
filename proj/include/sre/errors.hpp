#pragma once

#include <stdexcept>
#include <string>

namespace sre {

/// Base class for all failures raised by the library. Anything not derived
/// from Error escaping a public function is a bug.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix claimed symmetric violates the symmetry tolerance.
class NonSymmetric : public Error {
public:
    explicit NonSymmetric(const std::string& what) : Error(what) {}
};

/// Input contains NaN or Inf entries.
class NonFinite : public Error {
public:
    explicit NonFinite(const std::string& what) : Error(what) {}
};

/// A matrix required to be positive definite is not. Callers surface this
/// as a solve failure, never as a crash; `node` is the grid node at which
/// definiteness was lost, or -1 when no node applies.
class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(const std::string& what, int node = -1)
        : Error(what), node_(node) {}
    int node() const { return node_; }

private:
    int node_;
};

/// An integrated trajectory exceeded the overflow guard. Carries the last
/// node that still held a finite value.
class BlowUpDetected : public Error {
public:
    BlowUpDetected(const std::string& what, int last_finite_node)
        : Error(what), last_finite_node_(last_finite_node) {}
    int last_finite_node() const { return last_finite_node_; }

private:
    int last_finite_node_;
};

/// Picard iteration hit max_iter with the successive-iterate distance
/// still above tolerance.
class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& what) : Error(what) {}
};

/// The converged iterate lost positive definiteness at some grid node;
/// signals assumption failure or a too-coarse discretization.
class LostPositivity : public Error {
public:
    explicit LostPositivity(const std::string& what, int node = -1)
        : Error(what), node_(node) {}
    int node() const { return node_; }

private:
    int node_;
};

/// Two objects that must share a time grid do not.
class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

/// An operation valid only for one gauge mode was called in the other.
class ModeMismatch : public Error {
public:
    explicit ModeMismatch(const std::string& what) : Error(what) {}
};

/// Malformed user input (config file, matrix dimensions, CLI arguments).
/// Maps to exit code 2 in the CLI.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace sre
