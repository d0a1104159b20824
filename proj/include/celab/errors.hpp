#pragma once

#include <stdexcept>
#include <string>

namespace celab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iteration produced a non-finite value before the escape test fired.
struct NonFiniteOrbit : Error {
    using Error::Error;
};

// A window test was requested past the recorded orbit length.
struct WindowBeyondOrbit : Error {
    using Error::Error;
};

// An orbit point hit the critical point exactly, so Df vanishes.
struct DerivativeVanished : Error {
    using Error::Error;
};

// The reference orbit of a distortion sum passed through 0.
struct OrbitHitsCritical : Error {
    using Error::Error;
};

// what() names the violated inequality, e.g. "alpha/gamma_I cap".
struct InvalidConstants : Error {
    using Error::Error;
};

struct DepthLimit : Error {
    using Error::Error;
};

struct PrecisionExhausted : Error {
    using Error::Error;
};

// Malformed scenario file or option value.
struct ScenarioError : Error {
    using Error::Error;
};

} // namespace celab
