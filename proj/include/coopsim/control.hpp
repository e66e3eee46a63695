#pragma once

#include <algorithm>
#include <cmath>
#include <variant>

#include "coopsim/geometry.hpp"
#include "coopsim/planning.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace control {

struct PidConfig {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double out_limit = 1.0;  // symmetric clamp on the output
};

struct PidState {
    double integral = 0.0;
    double prev_error = 0.0;
    bool primed = false;  // derivative is zero until the second sample
};

// One PID step. The integral is clamped so that ki * integral alone can never
// exceed the output limit (anti-windup); the derivative is a backward
// difference.
inline double pid_step(const PidConfig& cfg, PidState& state, double error, double dt) {
    state.integral += error * dt;
    if (cfg.ki > 0.0) {
        const double cap = cfg.out_limit / cfg.ki;
        state.integral = std::clamp(state.integral, -cap, cap);
    }
    const double deriv = state.primed ? (error - state.prev_error) / dt : 0.0;
    state.prev_error = error;
    state.primed = true;
    const double out = cfg.kp * error + cfg.ki * state.integral + cfg.kd * deriv;
    return std::clamp(out, -cfg.out_limit, cfg.out_limit);
}

struct NoOverride {};
struct StopMode {};  // full brake, wheels straight; outranks the PIDs
struct SteerLimit {
    double max_steer = kMaxSteer;
};
using Override = std::variant<NoOverride, StopMode, SteerLimit>;

struct ControlConfig {
    PidConfig longitudinal{2.5, 0.1, 0.05, 4.0};  // m/s^2 limit
    // No derivative on steering: the lookahead error already supplies phase
    // lead, and a backward-difference D term chatters against the steering
    // clamp at simulation rate.
    PidConfig lateral{1.2, 0.0, 0.0, kMaxSteer};
    double lookahead_min = 3.0;
    double lookahead_time = 0.5;   // seconds of travel
    double heading_weight = 1.0;   // blends heading error into the lateral term
};

struct ControlState {
    PidState longitudinal{};
    PidState lateral{};
};

// Track the trajectory: speed PID on the nearest waypoint's target, steering
// PID on the signed cross-track offset of a lookahead point (in the ego
// frame, so left of the vehicle is positive) blended with heading error.
inline ControlInput control_step(const AgentState& ego, const planning::Trajectory& traj,
                                 const Override& ovr, const ControlConfig& cfg,
                                 ControlState& state, double dt) {
    if (std::holds_alternative<StopMode>(ovr)) {
        return {-cfg.longitudinal.out_limit, 0.0};
    }
    ControlInput u;
    if (traj.points.empty()) return u;

    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const double d = distance(traj.points[i], ego.pose.position());
        if (d < best) {
            best = d;
            nearest = i;
        }
    }

    const double speed_err = traj.speeds[nearest] - ego.speed;
    u.accel = pid_step(cfg.longitudinal, state.longitudinal, speed_err, dt);

    const double lookahead = std::max(cfg.lookahead_min, cfg.lookahead_time * ego.speed);
    const std::size_t steps = static_cast<std::size_t>(std::ceil(lookahead / traj.spacing));
    const std::size_t target = std::min(nearest + steps, traj.points.size() - 1);

    const Vec2 local = rotate(traj.points[target] - ego.pose.position(), -ego.pose.yaw);
    const double heading_err = angle_diff(traj.headings[target], ego.pose.yaw);
    const double lat_err = local.y + cfg.heading_weight * heading_err;
    u.steer = pid_step(cfg.lateral, state.lateral, lat_err, dt);

    if (const auto* lim = std::get_if<SteerLimit>(&ovr)) {
        u.steer = std::clamp(u.steer, -lim->max_steer, lim->max_steer);
    }
    u.steer = std::clamp(u.steer, -kMaxSteer, kMaxSteer);
    return u;
}

}  // namespace control
}  // namespace coopsim
