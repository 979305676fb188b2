#pragma once

#include <stdexcept>
#include <string>

namespace mitosim {

/// Requested evaluation point lies outside the valid window of a grid
/// function (windows shrink under evolution; extrapolation is never silent).
struct window_error : std::runtime_error {
    explicit window_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iteration failed to converge or a solver produced an untrustworthy
/// result (Picard stall, residual above threshold, exhausted horizon).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Dropped-mass budget of a comb evolution exceeded its allowance.
struct truncation_error : std::runtime_error {
    explicit truncation_error(const std::string& what) : std::runtime_error(what) {}
};

/// A certificate could not be established soundly (missing growth-envelope
/// constants, empty sub-level set, contraction factor >= 1).
struct certification_error : std::runtime_error {
    explicit certification_error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user-facing configuration (unknown key, malformed spec string,
/// inconsistent parameters).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mitosim
