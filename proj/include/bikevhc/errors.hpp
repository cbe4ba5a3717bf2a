#pragma once

#include <stdexcept>
#include <string>

namespace bikevhc {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Curve speed (or constraint regularity quantity) fell below tolerance.
struct RegularityError : Error {
    using Error::Error;
};

/// Periodic-solution search could not produce a valid constraint profile.
struct SynthesisError : Error {
    using Error::Error;
};

/// The decoupling term of the tracking controller vanished; the feedback is
/// undefined this far from the constraint manifold.
struct SingularFeedbackError : Error {
    using Error::Error;
};

/// Inertia matrix of the full model lost rank at the evaluated state.
struct ModelDegeneracyError : Error {
    using Error::Error;
};

/// Malformed config, CSV, or profile input.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace bikevhc
