#pragma once

#include <stdexcept>
#include <string>

namespace coopsim {

// Base for everything thrown by the library, so callers can catch one type.
struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested spawn footprint intersects an existing agent or obstacle.
struct OverlapError : SimError {
    using SimError::SimError;
};

// Rejection sampling ran out of attempts before placing the requested count.
struct PlacementExhausted : SimError {
    using SimError::SimError;
};

// A numeric argument is outside its documented domain.
struct DomainError : SimError {
    using SimError::SimError;
};

// Kalman innovation covariance is not invertible (degenerate noise config).
struct SingularInnovation : SimError {
    using SimError::SimError;
};

// A channel was polled with a timestamp earlier than a previous poll.
struct ClockRegression : SimError {
    using SimError::SimError;
};

// No path exists between the requested graph nodes.
struct NoRouteError : SimError {
    using SimError::SimError;
};

// Scenario document is not syntactically valid.
struct ParseError : SimError {
    using SimError::SimError;
};

// Scenario document is well-formed but violates a schema or referential rule.
// `path` names the offending field, e.g. "agents[2].sensor.fov_deg".
struct ValidationError : SimError {
    std::string path;
    ValidationError(std::string field_path, const std::string& what)
        : SimError(field_path + ": " + what), path(std::move(field_path)) {}
};

// Requested builtin scenario name does not exist.
struct UnknownScenarioError : SimError {
    using SimError::SimError;
};

// Filesystem write failed while emitting outputs.
struct IoError : SimError {
    using SimError::SimError;
};

}  // namespace coopsim
