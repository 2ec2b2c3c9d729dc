#pragma once

#include <stdexcept>
#include <string>

namespace nlw {

/// Input outside the mathematical domain of an operation (non-positive
/// density, subsonic point passed to a supersonic formula, ...).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Invalid problem setup: bad Riemann data, degenerate grid bounds,
/// out-of-range configuration keys.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Finite-volume solver failure (positivity lost after all retries).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, long cell = -1)
        : std::runtime_error(what), cell_(cell) {}
    long cell() const noexcept { return cell_; }

private:
    long cell_;
};

/// Post-processing could not produce a result (e.g. no shock/sonic transition).
class AnalysisError : public std::runtime_error {
public:
    explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

/// Characteristic mesh construction failed at a node.
class MeshError : public std::runtime_error {
public:
    MeshError(const std::string& what, int i, int j)
        : std::runtime_error(what), i_(i), j_(j) {}
    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_, j_;
};

/// Boundary-curve extraction from a field failed (trace left the grid, ...).
class ExtractionError : public std::runtime_error {
public:
    explicit ExtractionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlw
