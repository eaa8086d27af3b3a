#pragma once

#include <stdexcept>
#include <string>

namespace imb {

enum class ErrorKind {
    convexity_violation,
    tangent_chord,
    tangency_discontinuity,
    quadrature_failure,
    not_realizable,
    not_twist,
    no_convergence,
    regime_unsupported,
    singular_newton,
    denominator_singular,
    regime_mismatch,
    invalid_argument,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::convexity_violation: return "ConvexityViolation";
        case ErrorKind::tangent_chord: return "TangentChord";
        case ErrorKind::tangency_discontinuity: return "TangencyDiscontinuity";
        case ErrorKind::quadrature_failure: return "QuadratureFailure";
        case ErrorKind::not_realizable: return "NotRealizable";
        case ErrorKind::not_twist: return "NotTwist";
        case ErrorKind::no_convergence: return "NoConvergence";
        case ErrorKind::regime_unsupported: return "RegimeUnsupported";
        case ErrorKind::singular_newton: return "SingularNewton";
        case ErrorKind::denominator_singular: return "DenominatorSingular";
        case ErrorKind::regime_mismatch: return "RegimeMismatch";
        case ErrorKind::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Numerical failure raised by the library. `kind()` identifies the failure
/// class so callers can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace imb
