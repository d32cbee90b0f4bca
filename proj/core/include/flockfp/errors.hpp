#pragma once

#include <stdexcept>

namespace flockfp {

// Anything that makes a numerical routine unable to deliver its contract.
// Callers that map failures to process exit codes treat these as "numerical
// failure", while ConfigError means the request itself was malformed.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergent : NumericalError {
    using NumericalError::NumericalError;
};

struct DimensionUnsupported : NumericalError {
    using NumericalError::NumericalError;
};

struct NoPolarizedState : NumericalError {
    using NumericalError::NumericalError;
};

struct DerivativeUnstable : NumericalError {
    using NumericalError::NumericalError;
};

struct BracketNotFound : NumericalError {
    using NumericalError::NumericalError;
};

struct RootNotBracketed : NumericalError {
    using NumericalError::NumericalError;
};

struct VerificationFailed : NumericalError {
    using NumericalError::NumericalError;
};

struct EigenNotConverged : NumericalError {
    using NumericalError::NumericalError;
};

struct AnchorMismatch : NumericalError {
    using NumericalError::NumericalError;
};

struct ZeroMeanVelocity : NumericalError {
    using NumericalError::NumericalError;
};

struct CFLViolation : NumericalError {
    using NumericalError::NumericalError;
};

struct NegativeCell : NumericalError {
    using NumericalError::NumericalError;
};

struct NonPositiveValues : NumericalError {
    using NumericalError::NumericalError;
};

struct WindowTooShort : NumericalError {
    using NumericalError::NumericalError;
};

// Initial data that fails the smallness assumptions of the convergence
// theory. Runs may still proceed; reports carry the details.
struct HypothesisViolated : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace flockfp
