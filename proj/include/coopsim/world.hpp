#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopsim/errors.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/rng.hpp"

namespace coopsim {

enum class Role { Ego, Spectator, Rsu, Background, Pedestrian };

// Binary occlusion model: Elevated sensors see over Ground occluders.
enum class HeightClass { Ground, Elevated };

inline constexpr double kDefaultHalfLength = 2.4;
inline constexpr double kDefaultHalfWidth = 1.0;
inline constexpr double kDefaultWheelbase = 2.5;
inline constexpr double kMaxSpeed = 25.0;
inline constexpr double kMaxSteer = 0.6;

struct AgentState {
    int id = -1;
    Role role = Role::Background;
    Pose2D pose{};
    double speed = 0.0;  // m/s, always >= 0
    Vec2 half{kDefaultHalfLength, kDefaultHalfWidth};
    double wheelbase = kDefaultWheelbase;
    HeightClass mount = HeightClass::Ground;  // sensor mount, not body height

    OrientedBox footprint() const { return {pose.position(), half, pose.yaw}; }
};

struct StaticObstacle {
    Pose2D pose{};
    Vec2 half{};
    HeightClass height = HeightClass::Ground;

    bool operator==(const StaticObstacle&) const = default;
    OrientedBox footprint() const { return {pose.position(), half, pose.yaw}; }
};

// Lane: polyline over graph nodes plus optional left/right neighbors
// (as indexes into LaneGraph::lanes; -1 means none).
struct Lane {
    std::string id;
    std::vector<int> nodes;
    int left = -1;
    int right = -1;
    bool operator==(const Lane&) const = default;
};

struct LaneEdge {
    int from = 0;
    int to = 0;
    double length = 0.0;  // always the Euclidean node distance
    bool operator==(const LaneEdge&) const = default;
};

struct LaneGraph {
    std::vector<Vec2> nodes;
    std::vector<LaneEdge> edges;
    std::vector<Lane> lanes;

    bool operator==(const LaneGraph&) const = default;

    std::vector<Vec2> lane_points(int lane_index) const {
        std::vector<Vec2> pts;
        const Lane& lane = lanes.at(static_cast<std::size_t>(lane_index));
        pts.reserve(lane.nodes.size());
        for (int n : lane.nodes) pts.push_back(nodes.at(static_cast<std::size_t>(n)));
        return pts;
    }

    int lane_index(const std::string& lane_id) const {
        for (std::size_t i = 0; i < lanes.size(); ++i) {
            if (lanes[i].id == lane_id) return static_cast<int>(i);
        }
        return -1;
    }

    // Lane whose polyline is nearest to p.
    int nearest_lane(Vec2 p) const {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lanes.size(); ++i) {
            const auto pts = lane_points(static_cast<int>(i));
            if (pts.size() < 2) continue;
            const auto proj = project_onto_polyline(pts, p);
            const double d = distance(proj.point, p);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    }
};

// Edge lengths must match node geometry; lane refs must resolve.
inline void validate_lane_graph(const LaneGraph& g) {
    const int n = static_cast<int>(g.nodes.size());
    for (const LaneEdge& e : g.edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
            throw DomainError("lane graph edge references missing node");
        const double d = distance(g.nodes[static_cast<std::size_t>(e.from)],
                                  g.nodes[static_cast<std::size_t>(e.to)]);
        if (std::abs(d - e.length) > 1e-9)
            throw DomainError("lane graph edge length does not match node distance");
    }
    for (const Lane& lane : g.lanes) {
        for (int node : lane.nodes) {
            if (node < 0 || node >= n)
                throw DomainError("lane polyline references missing node");
        }
        const int nl = static_cast<int>(g.lanes.size());
        if (lane.left < -1 || lane.left >= nl || lane.right < -1 || lane.right >= nl)
            throw DomainError("lane neighbor index out of range");
    }
}

struct WorldState {
    std::uint64_t tick = 0;
    double dt = 0.05;
    std::vector<AgentState> agents;  // agent id == vector index
    std::vector<StaticObstacle> obstacles;
    double weather = 1.0;  // visibility factor in (0, 1]
    LaneGraph lanes;

    // Time is tick arithmetic, never an accumulated float.
    double time() const { return static_cast<double>(tick) * dt; }
};

inline void set_weather(WorldState& world, double factor) {
    if (!(factor > 0.0) || factor > 1.0)
        throw DomainError("weather factor must be in (0, 1]");
    world.weather = factor;
}

namespace detail {

inline bool placement_free(const WorldState& world, const OrientedBox& box) {
    for (const AgentState& a : world.agents) {
        if (boxes_intersect(box, a.footprint())) return false;
    }
    for (const StaticObstacle& o : world.obstacles) {
        if (boxes_intersect(box, o.footprint())) return false;
    }
    return true;
}

}  // namespace detail

struct SpawnRequest {
    Role role = Role::Background;
    Pose2D pose{};
    double speed = 0.0;
    Vec2 half{kDefaultHalfLength, kDefaultHalfWidth};
    double wheelbase = kDefaultWheelbase;
    HeightClass mount = HeightClass::Ground;
};

// Place one agent at an exact pose. Throws OverlapError if the footprint
// touches any existing agent or obstacle.
inline int spawn_by_location(WorldState& world, const SpawnRequest& req) {
    AgentState agent;
    agent.id = static_cast<int>(world.agents.size());
    agent.role = req.role;
    agent.pose = req.pose;
    agent.pose.yaw = normalize_angle(req.pose.yaw);
    agent.speed = req.role == Role::Rsu ? 0.0 : req.speed;
    agent.half = req.half;
    agent.wheelbase = req.wheelbase;
    agent.mount = req.role == Role::Rsu ? HeightClass::Elevated : req.mount;
    if (agent.speed < 0.0) throw DomainError("spawn speed must be >= 0");
    if (!detail::placement_free(world, agent.footprint()))
        throw OverlapError("spawn footprint overlaps existing geometry");
    world.agents.push_back(agent);
    return agent.id;
}

// Rejection-sample `count` Background agents inside `region` at lane-snapped
// poses. Pairwise center distance between the new agents stays >= min_gap;
// footprints stay clear of everything. Attempt budget is 100 per agent.
inline std::vector<int> spawn_by_range(WorldState& world, const Aabb& region, int count,
                                       double min_gap, RngStream& rng,
                                       Vec2 half = {kDefaultHalfLength, kDefaultHalfWidth}) {
    if (count < 0) throw DomainError("spawn count must be >= 0");
    std::vector<int> ids;
    std::vector<Vec2> placed;
    const int budget = 100 * std::max(count, 1);
    int attempts = 0;
    while (static_cast<int>(ids.size()) < count) {
        if (attempts++ >= budget)
            throw PlacementExhausted("spawn_by_range exceeded its attempt budget");
        const Vec2 sample{rng.uniform(region.min.x, region.max.x),
                          rng.uniform(region.min.y, region.max.y)};
        // Snap to the nearest lane so vehicles sit on the road.
        const int li = world.lanes.nearest_lane(sample);
        if (li < 0) throw DomainError("spawn_by_range needs at least one lane");
        const auto pts = world.lanes.lane_points(li);
        const auto proj = project_onto_polyline(pts, sample);
        if (!region.contains(proj.point)) continue;
        bool ok = true;
        for (const Vec2& p : placed) {
            if (distance(p, proj.point) < min_gap) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        const OrientedBox box{proj.point, half, proj.heading};
        if (!detail::placement_free(world, box)) continue;
        AgentState agent;
        agent.id = static_cast<int>(world.agents.size());
        agent.role = Role::Background;
        agent.pose = {proj.point.x, proj.point.y, normalize_angle(proj.heading)};
        agent.speed = 0.0;
        agent.half = half;
        world.agents.push_back(agent);
        ids.push_back(agent.id);
        placed.push_back(proj.point);
    }
    return ids;
}

struct ControlInput {
    double accel = 0.0;  // m/s^2
    double steer = 0.0;  // rad, clamped to [-kMaxSteer, kMaxSteer]
};

// Kinematic bicycle step, explicit Euler on the current state. Rsu agents
// never move.
inline AgentState step_kinematics(const AgentState& state, const ControlInput& u, double dt) {
    if (dt <= 0.0) throw DomainError("dt must be > 0");
    if (state.role == Role::Rsu) return state;
    AgentState next = state;
    const double steer = std::clamp(u.steer, -kMaxSteer, kMaxSteer);
    next.speed = std::clamp(state.speed + u.accel * dt, 0.0, kMaxSpeed);
    next.pose.yaw = normalize_angle(state.pose.yaw +
                                    (state.speed / state.wheelbase) * std::tan(steer) * dt);
    next.pose.x = state.pose.x + state.speed * dt * std::cos(state.pose.yaw);
    next.pose.y = state.pose.y + state.speed * dt * std::sin(state.pose.yaw);
    return next;
}

}  // namespace coopsim
