// Error types shared across the library.
#ifndef VORTEXJET_ERRORS_HPP
#define VORTEXJET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vortexjet {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Geometry
struct NoUniqueProjection : Error {
    explicit NoUniqueProjection(const std::string& w) : Error(w) {}
};

// Potentials
struct OrderUnavailable : Error {
    explicit OrderUnavailable(const std::string& w) : Error(w) {}
};

// Dynamics
struct Collision : Error {
    explicit Collision(const std::string& w) : Error(w) {}
};
struct Trapped : Error {
    explicit Trapped(const std::string& w) : Error(w) {}
};
struct StepFailure : Error {
    explicit StepFailure(const std::string& w) : Error(w) {}
};

// Measurement-map sampling
struct CompanionHidden : Error {
    explicit CompanionHidden(const std::string& w) : Error(w) {}
};

// Tangency construction and jet recovery
struct DegenerateVelocity : Error {
    explicit DegenerateVelocity(const std::string& w) : Error(w) {}
};
struct NoTransitionFound : Error {
    explicit NoTransitionFound(const std::string& w) : Error(w) {}
};
struct NonpositiveSlope : Error {
    explicit NonpositiveSlope(const std::string& w) : Error(w) {}
};
struct XiInsideTildeOmega : Error {
    explicit XiInsideTildeOmega(const std::string& w) : Error(w) {}
};
struct IllConditioned : Error {
    explicit IllConditioned(const std::string& w) : Error(w) {}
};

// Global reconstruction
struct SegmentLeavesValidity : Error {
    explicit SegmentLeavesValidity(const std::string& w) : Error(w) {}
};

// Configuration
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(w) {}
};

} // namespace vortexjet

#endif
