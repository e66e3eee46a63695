#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "coopsim/errors.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace planning {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// --- global route ---

struct Route {
    std::vector<int> nodes;
    std::vector<double> cumulative;  // arc length at each node, starts at 0

    double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// A* over the directed lane graph with the Euclidean heuristic (admissible:
// edge lengths are Euclidean). Equal f-scores pop in node-id order.
inline Route plan_global(const LaneGraph& g, int start, int goal) {
    const int n = static_cast<int>(g.nodes.size());
    if (start < 0 || start >= n || goal < 0 || goal >= n)
        throw DomainError("route endpoint is not a graph node");
    if (start == goal) return {{start}, {0.0}};

    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (const LaneEdge& e : g.edges)
        adj[static_cast<std::size_t>(e.from)].emplace_back(e.to, e.length);

    auto h = [&](int v) {
        return distance(g.nodes[static_cast<std::size_t>(v)], g.nodes[static_cast<std::size_t>(goal)]);
    };

    std::vector<double> dist(static_cast<std::size_t>(n), kInf);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    using Entry = std::pair<double, int>;  // (f, node); ties pop smaller id
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[static_cast<std::size_t>(start)] = 0.0;
    open.emplace(h(start), start);
    while (!open.empty()) {
        const auto [f, v] = open.top();
        open.pop();
        const double gv = dist[static_cast<std::size_t>(v)];
        if (f > gv + h(v) + 1e-12) continue;  // stale entry
        if (v == goal) break;
        for (const auto& [w, len] : adj[static_cast<std::size_t>(v)]) {
            const double cand = gv + len;
            if (cand < dist[static_cast<std::size_t>(w)]) {
                dist[static_cast<std::size_t>(w)] = cand;
                parent[static_cast<std::size_t>(w)] = v;
                open.emplace(cand + h(w), w);
            }
        }
    }
    if (dist[static_cast<std::size_t>(goal)] == kInf)
        throw NoRouteError("no route between the requested nodes");

    Route route;
    for (int v = goal; v != -1; v = parent[static_cast<std::size_t>(v)]) route.nodes.push_back(v);
    std::reverse(route.nodes.begin(), route.nodes.end());
    route.cumulative.resize(route.nodes.size(), 0.0);
    for (std::size_t i = 1; i < route.nodes.size(); ++i) {
        route.cumulative[i] =
            route.cumulative[i - 1] +
            distance(g.nodes[static_cast<std::size_t>(route.nodes[i - 1])],
                     g.nodes[static_cast<std::size_t>(route.nodes[i])]);
    }
    return route;
}

// --- behavior ---

struct TriggerZone {
    Aabb rect{};
    double t_on = 0.0;
    double t_off = kInf;

    bool operator==(const TriggerZone&) const = default;
    bool armed(double t) const { return t >= t_on && t <= t_off; }
};

enum class BehaviorKind {
    LaneFollow,
    CarFollow,
    Overtake,
    StopAtControl,
    TriggerStop,
    EmergencyBrake,
};

enum class OvertakePhase { None, ShiftOut, Pass, ShiftIn };

struct Behavior {
    BehaviorKind kind = BehaviorKind::LaneFollow;
    double gap = kInf;         // CarFollow: bumper gap to the lead, meters
    double lead_speed = 0.0;   // CarFollow: estimated lead speed, m/s
    double stop_arc = kInf;    // StopAtControl / TriggerStop: stop point, route arc
    OvertakePhase phase = OvertakePhase::None;
};

inline const char* behavior_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::LaneFollow: return "lane_follow";
        case BehaviorKind::CarFollow: return "car_follow";
        case BehaviorKind::Overtake: return "overtake";
        case BehaviorKind::StopAtControl: return "stop_at_control";
        case BehaviorKind::TriggerStop: return "trigger_stop";
        case BehaviorKind::EmergencyBrake: return "emergency_brake";
    }
    return "?";
}

struct BehaviorConfig {
    double v_des = 8.0;
    double d_emergency = 6.0;
    double d_follow = 25.0;
    double d_overtake = 20.0;
    double dv_overtake = 2.0;   // lead must be slower than v_des by this much
    double d_control = 30.0;
    double tau_headway = 1.5;
    double d_min = 5.0;
    double corridor_half = 1.75;      // half lane width
    double a_comfort = 2.5;           // ramp deceleration for planned stops
    double stop_bite = 0.5;           // zero-speed zone before the stop point
    double stop_offset = 1.5;         // stop short of a control point
    double zone_margin = 2.0;         // stop short of a trigger zone
    double sign_hold_range = 6.0;     // distance window that satisfies a stop sign
    double overtake_back = 6.0;       // corridor window behind ego
    double overtake_forward = 25.0;   // corridor window ahead of ego
    double lane_capture = 0.4;        // lateral tolerance to call a lane reached
    double pass_clear = 20.0;         // original lane must be clear this far ahead
    double pass_back = 6.0;           // ...and this far back before merging in
    int pass_confirm = 5;             // consecutive clear ticks before merging
    double match_gate = 2.5;          // box association gate for speed estimates
};

// Per-ego memory the behavior layer needs across ticks.
struct PlannerState {
    OvertakePhase phase = OvertakePhase::None;
    int pass_clear_streak = 0;  // consecutive ticks the original lane was clear
    std::set<std::size_t> satisfied_signs;
    std::vector<perception::BoundingBox2D> prev_boxes;
    double prev_time = -1.0;
};

// What the behavior layer knows about the ego's path: the route polyline, an
// optional adjacent lane for overtaking, and where the route enters each
// trigger zone (infinity when it never does).
struct PlanContext {
    std::vector<Vec2> path;
    std::vector<Vec2> adjacent;
    std::vector<double> zone_entry_arc;
};

// Arc position where a polyline first enters an axis-aligned rect, probed at
// half-meter steps; infinity if it never does.
inline double polyline_entry_arc(const std::vector<Vec2>& pts, const Aabb& rect) {
    const double total = polyline_length(pts);
    for (double s = 0.0; s <= total; s += 0.5) {
        if (rect.contains(polyline_point(pts, s))) return s;
    }
    return kInf;
}

namespace detail {

struct CorridorHit {
    double s = 0.0;        // arc of the box center along the path
    double lat = 0.0;      // signed lateral offset of the center
    double radius = 0.0;   // box half-size projected on the path direction
    std::size_t index = 0;
};

inline std::vector<CorridorHit> project_boxes(const std::vector<Vec2>& path,
                                              const std::vector<perception::BoundingBox2D>& boxes) {
    std::vector<CorridorHit> hits;
    hits.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto proj = project_onto_polyline(path, boxes[i].center);
        CorridorHit h;
        h.s = proj.arc;
        h.lat = proj.lateral;
        const double rel = angle_diff(boxes[i].yaw, proj.heading);
        h.radius = boxes[i].half.x * std::abs(std::cos(rel)) + boxes[i].half.y * std::abs(std::sin(rel));
        h.index = i;
        hits.push_back(h);
    }
    return hits;
}

// Nearest box ahead whose center sits inside the lateral corridor.
inline std::optional<CorridorHit> lead_in_corridor(const std::vector<CorridorHit>& hits,
                                                   double s_ego, double corridor_half) {
    std::optional<CorridorHit> best;
    for (const auto& h : hits) {
        if (std::abs(h.lat) > corridor_half) continue;
        if (h.s <= s_ego) continue;
        if (!best || h.s < best->s) best = h;
    }
    return best;
}

inline bool corridor_window_occupied(const std::vector<CorridorHit>& hits, double s_ego,
                                     double corridor_half, double back, double forward) {
    for (const auto& h : hits) {
        if (std::abs(h.lat) > corridor_half) continue;
        if (h.s >= s_ego - back && h.s <= s_ego + forward) return true;
    }
    return false;
}

}  // namespace detail

// Ranked behavior selection: EmergencyBrake > TriggerStop > StopAtControl >
// Overtake > CarFollow > LaneFollow. `boxes` are the fused detections after
// self-filtering; `control` is the nearest control observation, if any.
inline Behavior plan_behavior(const AgentState& ego,
                              const std::vector<perception::BoundingBox2D>& boxes,
                              const std::optional<perception::ControlObservation>& control,
                              const std::vector<TriggerZone>& zones, double now,
                              const PlanContext& ctx, const BehaviorConfig& cfg,
                              PlannerState& mem) {
    const auto ego_proj = project_onto_polyline(ctx.path, ego.pose.position());
    const double s_ego = ego_proj.arc;
    const auto route_hits = detail::project_boxes(ctx.path, boxes);
    const bool off_route = mem.phase == OvertakePhase::ShiftOut || mem.phase == OvertakePhase::Pass;

    // Estimate per-box speeds along the path by nearest-neighbor match with
    // the previous tick; unmatched boxes default to the ego's own speed.
    std::vector<double> speeds(boxes.size(), ego.speed);
    if (mem.prev_time >= 0.0 && now > mem.prev_time) {
        const double dtt = now - mem.prev_time;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            double best_d = cfg.match_gate;
            const perception::BoundingBox2D* match = nullptr;
            for (const auto& pb : mem.prev_boxes) {
                const double d = distance(boxes[i].center, pb.center);
                if (d < best_d) {
                    best_d = d;
                    match = &pb;
                }
            }
            if (match) {
                const auto proj = project_onto_polyline(ctx.path, boxes[i].center);
                const Vec2 disp = boxes[i].center - match->center;
                const Vec2 dir{std::cos(proj.heading), std::sin(proj.heading)};
                speeds[i] = std::max(0.0, dot(disp, dir) / dtt);
            }
        }
    }
    auto remember = [&](Behavior b) {
        mem.prev_boxes = boxes;
        mem.prev_time = now;
        mem.phase = b.kind == BehaviorKind::Overtake ? b.phase : OvertakePhase::None;
        if (mem.phase != OvertakePhase::Pass) mem.pass_clear_streak = 0;
        return b;
    };

    // 1. Emergency stop: something solid right ahead on the active path.
    {
        const auto& active_path = off_route && !ctx.adjacent.empty() ? ctx.adjacent : ctx.path;
        const auto hits = off_route ? detail::project_boxes(active_path, boxes) : route_hits;
        const double s_here = off_route
                                  ? project_onto_polyline(active_path, ego.pose.position()).arc
                                  : s_ego;
        for (const auto& h : hits) {
            if (std::abs(h.lat) > cfg.corridor_half) continue;
            const double gap = h.s - s_here - h.radius - ego.half.x;
            if (h.s > s_here && gap <= cfg.d_emergency) {
                Behavior b;
                b.kind = BehaviorKind::EmergencyBrake;
                return remember(b);
            }
        }
    }

    // 2. Trigger zones: stop short of the first armed zone holding a box.
    {
        double stop_arc = kInf;
        bool hit = false;
        for (std::size_t z = 0; z < zones.size(); ++z) {
            if (!zones[z].armed(now)) continue;
            bool occupied = false;
            for (const auto& b : boxes) {
                if (zones[z].rect.contains(b.center)) {
                    occupied = true;
                    break;
                }
            }
            if (!occupied) continue;
            hit = true;
            const double entry =
                z < ctx.zone_entry_arc.size() ? ctx.zone_entry_arc[z] : kInf;
            const double arc = entry == kInf ? s_ego : entry - cfg.zone_margin;
            stop_arc = std::min(stop_arc, arc);
        }
        if (hit) {
            Behavior b;
            b.kind = BehaviorKind::TriggerStop;
            b.stop_arc = std::min(stop_arc, s_ego + 1e9);
            return remember(b);
        }
    }

    // 3. Red light or unserved stop sign within control distance.
    if (control && control->distance <= cfg.d_control) {
        bool stop_here = false;
        if (control->kind == perception::ControlKind::StopSign) {
            if (!mem.satisfied_signs.count(control->control_index)) {
                if (ego.speed <= 0.03 && control->distance <= cfg.sign_hold_range) {
                    mem.satisfied_signs.insert(control->control_index);  // served, roll on
                } else {
                    stop_here = true;
                }
            }
        } else if (control->light != perception::LightState::Green) {
            stop_here = true;
        }
        if (stop_here) {
            Behavior b;
            b.kind = BehaviorKind::StopAtControl;
            b.stop_arc = s_ego + control->distance - cfg.stop_offset;
            return remember(b);
        }
    }

    const auto lead = detail::lead_in_corridor(route_hits, s_ego, cfg.corridor_half);

    // 4. Overtake, continuing an active maneuver first.
    if (mem.phase != OvertakePhase::None && !ctx.adjacent.empty()) {
        const auto adj_hits = detail::project_boxes(ctx.adjacent, boxes);
        const auto adj_proj = project_onto_polyline(ctx.adjacent, ego.pose.position());
        if (mem.phase == OvertakePhase::ShiftOut || mem.phase == OvertakePhase::Pass) {
            const bool blocked = detail::corridor_window_occupied(
                adj_hits, adj_proj.arc, cfg.corridor_half, cfg.overtake_back, cfg.overtake_forward);
            if (blocked) {
                Behavior b;
                b.kind = BehaviorKind::CarFollow;
                if (lead) {
                    b.gap = lead->s - s_ego - lead->radius - ego.half.x;
                    b.lead_speed = speeds[lead->index];
                }
                return remember(b);
            }
            OvertakePhase phase = mem.phase;
            if (phase == OvertakePhase::ShiftOut &&
                std::abs(adj_proj.lateral) <= cfg.lane_capture) {
                phase = OvertakePhase::Pass;
            }
            if (phase == OvertakePhase::Pass) {
                // The pass is over once the original lane stays clear for a
                // few consecutive ticks; a single tick proves nothing when a
                // detector can miss a frame.
                bool ahead_occupied = false;
                for (const auto& h : route_hits) {
                    if (std::abs(h.lat) > cfg.corridor_half) continue;
                    if (h.s > s_ego - cfg.pass_back && h.s <= s_ego + cfg.pass_clear) {
                        ahead_occupied = true;
                        break;
                    }
                }
                mem.pass_clear_streak = ahead_occupied ? 0 : mem.pass_clear_streak + 1;
                if (mem.pass_clear_streak >= cfg.pass_confirm) phase = OvertakePhase::ShiftIn;
            }
            Behavior b;
            b.kind = BehaviorKind::Overtake;
            b.phase = phase;
            return remember(b);
        }
        // ShiftIn: done once back on the route centerline.
        if (std::abs(ego_proj.lateral) <= cfg.lane_capture) {
            mem.phase = OvertakePhase::None;
        } else {
            Behavior b;
            b.kind = BehaviorKind::Overtake;
            b.phase = OvertakePhase::ShiftIn;
            return remember(b);
        }
    }

    if (lead) {
        const double gap = lead->s - s_ego - lead->radius - ego.half.x;
        const double lead_speed = speeds[lead->index];
        // 4b. Start an overtake when the lead crawls and the next lane is open.
        if (!ctx.adjacent.empty() && gap <= cfg.d_overtake &&
            lead_speed < cfg.v_des - cfg.dv_overtake) {
            const auto adj_hits = detail::project_boxes(ctx.adjacent, boxes);
            const auto adj_proj = project_onto_polyline(ctx.adjacent, ego.pose.position());
            const bool blocked = detail::corridor_window_occupied(
                adj_hits, adj_proj.arc, cfg.corridor_half, cfg.overtake_back, cfg.overtake_forward);
            if (!blocked) {
                Behavior b;
                b.kind = BehaviorKind::Overtake;
                b.phase = OvertakePhase::ShiftOut;
                return remember(b);
            }
        }
        // 5. Follow.
        if (gap <= cfg.d_follow) {
            Behavior b;
            b.kind = BehaviorKind::CarFollow;
            b.gap = gap;
            b.lead_speed = lead_speed;
            return remember(b);
        }
    }

    // 6. Cruise.
    return remember(Behavior{});
}

// --- local trajectory ---

struct Trajectory {
    std::vector<Vec2> points;
    std::vector<double> headings;
    std::vector<double> speeds;
    double spacing = 2.0;
};

struct TrajectoryConfig {
    double spacing = 2.0;  // <= 2 m per the corridor contract
    int horizon = 25;      // waypoint count
};

// Sample waypoints from the ego's projection forward and attach target
// speeds for the selected behavior. During ShiftOut/Pass the waypoints come
// from the adjacent lane centerline; otherwise from the route.
inline Trajectory plan_trajectory(const PlanContext& ctx, const Behavior& behavior,
                                  const AgentState& ego, const BehaviorConfig& cfg,
                                  const TrajectoryConfig& tcfg = {}) {
    const bool off_route = behavior.kind == BehaviorKind::Overtake &&
                           (behavior.phase == OvertakePhase::ShiftOut ||
                            behavior.phase == OvertakePhase::Pass) &&
                           !ctx.adjacent.empty();
    const std::vector<Vec2>& path = off_route ? ctx.adjacent : ctx.path;
    const auto proj = project_onto_polyline(path, ego.pose.position());

    Trajectory traj;
    traj.spacing = tcfg.spacing;
    traj.points.reserve(static_cast<std::size_t>(tcfg.horizon));
    for (int i = 0; i < tcfg.horizon; ++i) {
        const double s = proj.arc + static_cast<double>(i) * tcfg.spacing;
        double heading = 0.0;
        const Vec2 p = polyline_point(path, s, &heading);
        traj.points.push_back(p);
        traj.headings.push_back(heading);

        double v = cfg.v_des;
        switch (behavior.kind) {
            case BehaviorKind::EmergencyBrake:
                v = 0.0;
                break;
            case BehaviorKind::TriggerStop:
            case BehaviorKind::StopAtControl: {
                // Stop arc is measured on the route; waypoints are on-route
                // for these behaviors.
                const double remaining = behavior.stop_arc - s;
                v = remaining <= cfg.stop_bite
                        ? 0.0
                        : std::min(cfg.v_des, std::sqrt(2.0 * cfg.a_comfort * remaining));
                break;
            }
            case BehaviorKind::CarFollow: {
                const double desired = std::max(cfg.d_min, cfg.tau_headway * ego.speed);
                if (behavior.gap < desired) {
                    v = behavior.lead_speed;
                } else if (behavior.gap < kInf) {
                    v = std::min(cfg.v_des,
                                 behavior.lead_speed + 0.5 * (behavior.gap - desired));
                }
                break;
            }
            case BehaviorKind::Overtake:
            case BehaviorKind::LaneFollow:
                break;
        }
        traj.speeds.push_back(v);
    }
    return traj;
}

}  // namespace planning
}  // namespace coopsim
