#pragma once
// Error taxonomy shared by all modules.
//
// InputError / PreconditionError / ResourceError signal problems with the
// user's inputs or with analysis preconditions (CLI exit code 2).
// SolverError / ConsistencyError signal internal numerical failures
// (CLI exit code 1).

#include <stdexcept>
#include <string>

namespace delaymargin {

struct ToolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable/malformed files, bad matrices, invalid configuration values.
struct InputError : ToolError {
    using ToolError::ToolError;
};

// Analysis preconditions violated: unstable delay-free system, s=0 root.
struct PreconditionError : ToolError {
    using ToolError::ToolError;
};

// Memory guard tripped before a dense construction.
struct ResourceError : ToolError {
    using ToolError::ToolError;
};

// Eigensolver / QZ non-convergence, refinement bracket loss.
struct SolverError : ToolError {
    using ToolError::ToolError;
};

// Internal invariant broken (e.g. the stability walk count going negative).
struct ConsistencyError : ToolError {
    using ToolError::ToolError;
};

// A claimed crossing frequency has no unit-magnitude generalized eigenvalue.
struct SpuriousCrossingError : ToolError {
    using ToolError::ToolError;
};

} // namespace delaymargin
