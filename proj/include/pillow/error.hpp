#pragma once

#include <stdexcept>
#include <string>

namespace pillow {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input structure (wrong grid dimensions, negative entries, bad syntax).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Unknown name or identifier (builtin pattern, corner instance).
class LookupError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Pattern that fails an admissibility condition where one is required.
class InadmissibleError : public Error {
public:
    using Error::Error;
};

/// Symmetry image does not exist for the pattern (PC1 violated).
class SymmetryError : public Error {
public:
    using Error::Error;
};

/// Requested computation exceeds the configured cell budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Linear solver failed to reach the requested residual.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Reduced system is singular (free component without a constraint).
class SingularSystemError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Property that holds analytically was violated numerically.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace pillow
