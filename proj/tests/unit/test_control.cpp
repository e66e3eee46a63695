#include <doctest.h>

#include <cmath>
#include <vector>

#include "coopsim/control.hpp"
#include "coopsim/planning.hpp"

using namespace coopsim;
using namespace coopsim::control;

namespace {

planning::Trajectory straight_traj(double from_x, double speed, double y = 0.0, int n = 25) {
    planning::Trajectory t;
    for (int i = 0; i < n; ++i) {
        t.points.push_back({from_x + 2.0 * i, y});
        t.headings.push_back(0.0);
        t.speeds.push_back(speed);
    }
    return t;
}

AgentState ego_at(double x, double y, double speed, double yaw = 0.0) {
    AgentState a;
    a.pose = {x, y, yaw};
    a.speed = speed;
    return a;
}

}  // namespace

TEST_CASE("a proportional controller scales the error") {
    PidConfig cfg;
    cfg.kp = 0.5;
    cfg.out_limit = 10.0;
    PidState st;
    CHECK(pid_step(cfg, st, 2.0, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("zero error in, zero command out") {
    PidConfig cfg;
    cfg.kp = 1.0;
    cfg.ki = 0.5;
    cfg.kd = 0.1;
    cfg.out_limit = 10.0;
    PidState st;
    for (int i = 0; i < 20; ++i) CHECK(pid_step(cfg, st, 0.0, 0.05) == 0.0);
}

TEST_CASE("the integral accumulates error over time") {
    PidConfig cfg;
    cfg.ki = 1.0;
    cfg.out_limit = 10.0;
    PidState st;
    CHECK(pid_step(cfg, st, 1.0, 0.1) == doctest::Approx(0.1));
    CHECK(pid_step(cfg, st, 1.0, 0.1) == doctest::Approx(0.2));
}

TEST_CASE("the derivative waits for a second sample") {
    PidConfig cfg;
    cfg.kd = 1.0;
    cfg.out_limit = 100.0;
    PidState st;
    CHECK(pid_step(cfg, st, 5.0, 0.1) == 0.0);                      // not primed yet
    CHECK(pid_step(cfg, st, 6.0, 0.1) == doctest::Approx(10.0));    // (6-5)/0.1
}

TEST_CASE("the output clamps symmetrically") {
    PidConfig cfg;
    cfg.kp = 100.0;
    cfg.out_limit = 4.0;
    PidState st;
    CHECK(pid_step(cfg, st, 1.0, 0.05) == 4.0);
    CHECK(pid_step(cfg, st, -1.0, 0.05) == -4.0);
}

TEST_CASE("the integral cannot wind up past the output limit") {
    PidConfig cfg;
    cfg.ki = 0.5;
    cfg.out_limit = 2.0;
    PidState st;
    for (int i = 0; i < 1000; ++i) {
        const double out = pid_step(cfg, st, 100.0, 0.05);
        CHECK(out <= 2.0);
    }
    CHECK(st.integral <= 2.0 / 0.5 + 1e-12);
    // With the error gone, the clamped integral alone sits at the limit but
    // no further; it unwinds as opposing error arrives.
    const double residual = pid_step(cfg, st, 0.0, 0.05);
    CHECK(residual == doctest::Approx(2.0));
}

TEST_CASE("a speed step on an integrating plant settles within four seconds") {
    const PidConfig cfg = ControlConfig{}.longitudinal;
    PidState st;
    double v = 0.0;
    const double dt = 0.05;
    double settled_at = -1.0;
    for (int k = 0; k <= 200; ++k) {  // 10 s
        const double t = k * dt;
        if (std::abs(v - 8.0) <= 0.4) {
            if (settled_at < 0.0) settled_at = t;
        } else if (t > 4.0) {
            FAIL("left the 5% band at t=", t, " v=", v);
        }
        v += pid_step(cfg, st, 8.0 - v, dt) * dt;
    }
    CHECK(settled_at >= 0.0);
    CHECK(settled_at <= 4.0);
    CHECK(std::abs(v - 8.0) <= 0.4);  // still inside the band at the end
}

TEST_CASE("stop mode slams the brakes with the wheels straight") {
    ControlConfig cfg;
    ControlState st;
    const auto traj = straight_traj(0.0, 8.0);
    const ControlInput u =
        control_step(ego_at(0.0, 0.0, 8.0), traj, StopMode{}, cfg, st, 0.05);
    CHECK(u.accel == doctest::Approx(-cfg.longitudinal.out_limit));
    CHECK(u.steer == 0.0);
}

TEST_CASE("an empty trajectory coasts") {
    ControlConfig cfg;
    ControlState st;
    const ControlInput u =
        control_step(ego_at(0.0, 0.0, 8.0), planning::Trajectory{}, NoOverride{}, cfg, st, 0.05);
    CHECK(u.accel == 0.0);
    CHECK(u.steer == 0.0);
}

TEST_CASE("on the centerline at speed, commands vanish") {
    ControlConfig cfg;
    ControlState st;
    const auto traj = straight_traj(0.0, 8.0);
    const ControlInput u =
        control_step(ego_at(0.0, 0.0, 8.0), traj, NoOverride{}, cfg, st, 0.05);
    CHECK(std::abs(u.accel) < 1e-6);
    CHECK(std::abs(u.steer) < 1e-6);
}

TEST_CASE("the speed command follows the nearest waypoint's target") {
    ControlConfig cfg;
    ControlState st;
    auto traj = straight_traj(0.0, 8.0);
    traj.speeds[0] = 6.0;  // nearest to the ego
    const ControlInput u =
        control_step(ego_at(0.0, 0.0, 4.0), traj, NoOverride{}, cfg, st, 0.05);
    // kp * 2 saturates the 4 m/s^2 limit
    CHECK(u.accel == doctest::Approx(cfg.longitudinal.out_limit));
}

TEST_CASE("sitting left of the lane steers right") {
    ControlConfig cfg;
    ControlState st;
    const auto traj = straight_traj(0.0, 8.0);
    const ControlInput u =
        control_step(ego_at(0.0, 1.0, 8.0), traj, NoOverride{}, cfg, st, 0.05);
    CHECK(u.steer < 0.0);
}

TEST_CASE("a steering override narrows the command range") {
    ControlConfig cfg;
    ControlState st;
    const auto traj = straight_traj(0.0, 8.0);
    const ControlInput u =
        control_step(ego_at(0.0, 1.0, 8.0), traj, SteerLimit{0.1}, cfg, st, 0.05);
    CHECK(u.steer == doctest::Approx(-0.1));
}

TEST_CASE("steering never exceeds the physical limit") {
    ControlConfig cfg;
    ControlState st;
    const auto traj = straight_traj(0.0, 8.0);
    const ControlInput u =
        control_step(ego_at(0.0, 3.0, 8.0), traj, NoOverride{}, cfg, st, 0.05);
    CHECK(u.steer == doctest::Approx(-kMaxSteer));
}

TEST_CASE("lateral tracking pulls a 0.5 m offset under 10 cm and holds it") {
    // Closed loop against the kinematic bicycle at several cruise speeds:
    // the offset must shrink below 0.1 m within 6 s and stay there for a
    // full minute with no sustained oscillation growth.
    const double dt = 0.05;
    for (double cruise : {8.0, 10.0, 12.0}) {
        CAPTURE(cruise);
        planning::PlanContext ctx;
        ctx.path = {{0.0, 0.0}, {2000.0, 0.0}};
        planning::BehaviorConfig bcfg;
        bcfg.v_des = cruise;
        ControlConfig ccfg;
        ControlState cst;
        AgentState ego = ego_at(0.0, 0.5, cruise);

        double worst_late = 0.0;   // after the settling deadline
        double worst_early = 0.0;  // during settling
        for (int k = 0; k < 1200; ++k) {  // 60 s
            const double t = k * dt;
            const double off = std::abs(ego.pose.y);
            if (t < 6.0)
                worst_early = std::max(worst_early, off);
            else
                worst_late = std::max(worst_late, off);
            const auto traj = plan_trajectory(ctx, planning::Behavior{}, ego, bcfg);
            const auto u = control_step(ego, traj, NoOverride{}, ccfg, cst, dt);
            ego = step_kinematics(ego, u, dt);
        }
        CHECK(worst_late < 0.1);
        CHECK(worst_early < 0.6);  // no overshoot blow-up on the way in
    }
}

TEST_CASE("a lane change converges without oscillation growth") {
    // Start 3.5 m off the target lane (a lane-change-sized error) and track
    // the same straight line; the loop must capture the lane and settle.
    const double dt = 0.05;
    planning::PlanContext ctx;
    ctx.path = {{0.0, 0.0}, {2000.0, 0.0}};
    planning::BehaviorConfig bcfg;
    bcfg.v_des = 10.0;
    ControlConfig ccfg;
    ControlState cst;
    AgentState ego = ego_at(0.0, 3.5, 10.0);

    double worst_late = 0.0;
    for (int k = 0; k < 600; ++k) {  // 30 s
        const double t = k * dt;
        if (t >= 8.0) worst_late = std::max(worst_late, std::abs(ego.pose.y));
        const auto traj = plan_trajectory(ctx, planning::Behavior{}, ego, bcfg);
        const auto u = control_step(ego, traj, NoOverride{}, ccfg, cst, dt);
        ego = step_kinematics(ego, u, dt);
    }
    CHECK(worst_late < 0.1);
}
