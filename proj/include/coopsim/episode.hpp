#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coopsim/builtins.hpp"
#include "coopsim/channel.hpp"
#include "coopsim/control.hpp"
#include "coopsim/errors.hpp"
#include "coopsim/fusion.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/planning.hpp"
#include "coopsim/rng.hpp"
#include "coopsim/scenario.hpp"
#include "coopsim/sensing.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace sim {

enum class Outcome { Goal, Collision, Timeout };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Goal: return "goal";
        case Outcome::Collision: return "collision";
        case Outcome::Timeout: return "timeout";
    }
    return "?";
}

// One logged simulation step, captured before the state integrates forward.
struct TickRow {
    std::uint64_t tick = 0;
    double time = 0.0;
    Pose2D ego_pose{};
    double ego_speed = 0.0;
    planning::BehaviorKind behavior = planning::BehaviorKind::LaneFollow;
    int fused_count = 0;
    std::vector<int> source_counts;  // ego first, then participants in spec order
    int delivered = 0;               // frames handed to the ego this tick
    int dropped = 0;                 // frames lost in the channel this tick
    double gap = std::numeric_limits<double>::infinity();  // body gap, see below
};

struct EpisodeResult {
    std::string scenario;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Timeout;
    bool collision = false;
    // Body-to-body clearance: the per-tick minimum against the designated
    // adversary when the scenario names one, otherwise against every other
    // agent. Exactly 0 when the episode ends in a collision; infinity when
    // there was never anything to measure against.
    double min_distance = std::numeric_limits<double>::infinity();
    double duration = 0.0;
    std::uint64_t ticks = 0;
    // First tick the ego's own detector reported the designated adversary
    // (matched by ground-truth id, so only oracle perception fills it in);
    // -1 when it never happened or nothing was designated.
    std::int64_t first_adversary_seen_tick = -1;
    std::vector<std::string> sources;  // column labels matching source_counts
    std::vector<TickRow> rows;
    comms::ChannelStats channel{};  // totals across all participant links

    bool success() const { return !collision; }
};

namespace detail {

inline sensing::SensorConfig sensor_of(const scenario::AgentSpec& a) {
    sensing::SensorConfig s;
    s.fov_deg = a.sensor.fov_deg;
    s.range = a.sensor.range;
    s.mount = a.sensor.mount;
    s.height = a.mount;
    return s;
}

inline perception::PerceptionConfig perception_of(const scenario::AgentSpec& a) {
    perception::PerceptionConfig p;
    p.mode = a.perception.mode;
    p.p_detect = a.perception.p_detect;
    p.sigma_pos = a.perception.sigma_pos;
    p.sigma_ext = a.perception.sigma_ext;
    return p;
}

}  // namespace detail

// Run one episode of `spec` under `seed`. Reruns with the same arguments are
// bit-identical: time is tick arithmetic and every random decision comes from
// a substream keyed by (seed, purpose, agent).
inline EpisodeResult run_episode(const scenario::ScenarioSpec& spec, std::uint64_t seed) {
    scenario::validate(spec);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    WorldState world;
    world.dt = spec.dt;
    world.lanes = spec.map.graph;
    set_weather(world, spec.weather);
    for (const auto& o : spec.map.obstacles) world.obstacles.push_back(o);

    std::map<std::string, int> id_of;
    for (const auto& a : spec.agents) {
        SpawnRequest req;
        req.role = a.role;
        req.pose = a.pose;
        req.speed = a.speed;
        req.half = a.half;
        req.wheelbase = a.wheelbase;
        req.mount = a.mount;
        id_of[a.name] = spawn_by_location(world, req);
    }
    const int ego_id = id_of.at(spec.ego.agent);
    const scenario::AgentSpec* ego_spec = nullptr;
    for (const auto& a : spec.agents)
        if (a.name == spec.ego.agent) ego_spec = &a;

    if (spec.background && spec.background->count > 0) {
        RngStream rng(seed, StreamPurpose::Spawn, 0);
        spawn_by_range(world, spec.background->region, spec.background->count,
                       spec.background->min_gap, rng, spec.background->half);
    }

    // Scripted traffic follows its lane polyline at the scheduled speed.
    struct RunningScript {
        int agent = -1;
        std::vector<Vec2> pts;
        const scenario::ScriptSpec* script = nullptr;
        double arc = 0.0;
    };
    std::vector<RunningScript> scripts;
    for (const auto& a : spec.agents) {
        if (!a.script) continue;
        RunningScript rs;
        rs.agent = id_of.at(a.name);
        rs.pts = world.lanes.lane_points(world.lanes.lane_index(a.script->lane));
        rs.script = &*a.script;
        rs.arc = a.script->start_arc;
        scripts.push_back(std::move(rs));
    }

    // Route and planning context.
    const planning::Route route =
        planning::plan_global(world.lanes, spec.ego.start_node, spec.ego.goal_node);
    planning::PlanContext ctx;
    for (int node : route.nodes)
        ctx.path.push_back(world.lanes.nodes[static_cast<std::size_t>(node)]);
    if (ctx.path.size() < 2) throw DomainError("route needs at least two nodes");
    {
        int start_lane = world.lanes.nearest_lane(
            world.lanes.nodes[static_cast<std::size_t>(spec.ego.start_node)]);
        if (start_lane < 0) start_lane = world.lanes.nearest_lane(ego_spec->pose.position());
        const int li = start_lane;
        if (li >= 0 && world.lanes.lanes[static_cast<std::size_t>(li)].left >= 0)
            ctx.adjacent = world.lanes.lane_points(
                world.lanes.lanes[static_cast<std::size_t>(li)].left);
    }
    for (const auto& z : spec.trigger_zones)
        ctx.zone_entry_arc.push_back(planning::polyline_entry_arc(ctx.path, z.rect));
    const Vec2 goal_point = world.lanes.nodes[static_cast<std::size_t>(spec.ego.goal_node)];

    // Perception streams and V2X links.
    const sensing::SensorConfig ego_sensor = detail::sensor_of(*ego_spec);
    const perception::PerceptionConfig ego_pcfg = detail::perception_of(*ego_spec);
    RngStream ego_rng(seed, StreamPurpose::Perception, static_cast<std::uint64_t>(ego_id));

    struct Participant {
        int id = -1;
        std::string name;
        sensing::SensorConfig sensor;
        perception::PerceptionConfig pcfg;
        RngStream rng;
        comms::Channel channel;
    };
    std::vector<Participant> participants;
    for (const auto& name : spec.ego.participants) {
        const scenario::AgentSpec* as = nullptr;
        for (const auto& a : spec.agents)
            if (a.name == name) as = &a;
        Participant p;
        p.id = id_of.at(name);
        p.name = name;
        p.sensor = detail::sensor_of(*as);
        p.pcfg = detail::perception_of(*as);
        p.rng = RngStream(seed, StreamPurpose::Perception, static_cast<std::uint64_t>(p.id));
        scenario::ChannelSpec cs = spec.default_channel;
        if (auto it = spec.channel_overrides.find(name); it != spec.channel_overrides.end())
            cs = it->second;
        comms::ChannelConfig cc;
        cc.latency = cs.latency;
        cc.drop_rate = cs.drop_rate;
        p.channel = comms::Channel(cc, RngStream(seed, StreamPurpose::Channel,
                                                 static_cast<std::uint64_t>(p.id)));
        participants.push_back(std::move(p));
    }

    // Latest frame received per source, pruned against the stale horizon so a
    // lossy link degrades to old data and then to no data, never to garbage.
    std::map<int, perception::DetectionFrame> latest;

    planning::BehaviorConfig bcfg;
    bcfg.v_des = spec.ego.v_des;
    planning::PlannerState planner_mem;
    control::ControlConfig ccfg;
    control::ControlState control_state;
    const int adversary_id = spec.adversary ? id_of.at(*spec.adversary) : -1;

    EpisodeResult result;
    result.scenario = spec.name;
    result.seed = seed;
    result.sources.push_back(spec.ego.agent);
    for (const auto& p : participants) result.sources.push_back(p.name);

    std::uint64_t prev_delivered = 0, prev_dropped = 0;

    for (;;) {
        const double now = world.time();
        const AgentState& ego = world.agents[static_cast<std::size_t>(ego_id)];

        // --- termination checks on the current state ---
        bool collided = false;
        for (const auto& a : world.agents) {
            if (a.id == ego_id) continue;
            if (boxes_intersect(ego.footprint(), a.footprint())) collided = true;
        }
        for (const auto& o : world.obstacles)
            if (boxes_intersect(ego.footprint(), o.footprint())) collided = true;
        if (collided) {
            result.outcome = Outcome::Collision;
            result.collision = true;
            result.min_distance = 0.0;
            break;
        }
        double tick_gap = kInf;
        if (adversary_id >= 0) {
            tick_gap = box_gap(ego.footprint(),
                               world.agents[static_cast<std::size_t>(adversary_id)].footprint());
        } else {
            for (const auto& a : world.agents) {
                if (a.id == ego_id) continue;
                tick_gap = std::min(tick_gap, box_gap(ego.footprint(), a.footprint()));
            }
        }
        result.min_distance = std::min(result.min_distance, tick_gap);
        if (distance(ego.pose.position(), goal_point) <= spec.termination.goal_tolerance) {
            result.outcome = Outcome::Goal;
            break;
        }
        if (now >= spec.termination.timeout) {
            result.outcome = Outcome::Timeout;
            break;
        }

        // --- sense ---
        const perception::DetectionFrame ego_frame =
            perception::perceive(ego, ego_sensor, ego_pcfg, world, ego_rng);
        if (adversary_id >= 0 && result.first_adversary_seen_tick < 0) {
            for (const auto& d : ego_frame.detections) {
                if (d.truth_id && *d.truth_id == adversary_id) {
                    result.first_adversary_seen_tick = static_cast<std::int64_t>(world.tick);
                    break;
                }
            }
        }

        // --- share over the channel ---
        for (auto& p : participants) {
            const AgentState& obs = world.agents[static_cast<std::size_t>(p.id)];
            p.channel.send(perception::perceive(obs, p.sensor, p.pcfg, world, p.rng), now);
            for (auto& frame : p.channel.poll(now)) {
                auto it = latest.find(p.id);
                if (it == latest.end() || frame.stamp > it->second.stamp)
                    latest[p.id] = std::move(frame);
            }
        }
        for (auto it = latest.begin(); it != latest.end();) {
            if (it->second.stamp < now - spec.ego.fusion.stale_horizon)
                it = latest.erase(it);
            else
                ++it;
        }

        // --- fuse ---
        std::vector<perception::DetectionFrame> frames{ego_frame};
        for (const auto& p : participants) {
            if (auto it = latest.find(p.id); it != latest.end()) frames.push_back(it->second);
        }
        std::vector<perception::BoundingBox2D> fused =
            fusion::fuse(frames, spec.ego.fusion, now);
        // Shared frames echo the ego itself; drop anything centered on it.
        const OrientedBox self_guard{ego.pose.position(),
                                     {ego.half.x + 0.75, ego.half.y + 0.75}, ego.pose.yaw};
        fused.erase(std::remove_if(fused.begin(), fused.end(),
                                   [&](const perception::BoundingBox2D& b) {
                                       return self_guard.contains(b.center);
                                   }),
                    fused.end());

        // --- plan ---
        const auto control_obs =
            perception::sense_traffic_control(ego, ego_sensor, world, spec.map.controls);
        const planning::Behavior behavior = planning::plan_behavior(
            ego, fused, control_obs, spec.trigger_zones, now, ctx, bcfg, planner_mem);
        const planning::Trajectory traj =
            planning::plan_trajectory(ctx, behavior, ego, bcfg);

        // --- act ---
        const ControlInput u = control::control_step(ego, traj, control::NoOverride{}, ccfg,
                                                     control_state, world.dt);

        // --- log ---
        TickRow row;
        row.tick = world.tick;
        row.time = now;
        row.ego_pose = ego.pose;
        row.ego_speed = ego.speed;
        row.behavior = behavior.kind;
        row.fused_count = static_cast<int>(fused.size());
        row.source_counts.push_back(static_cast<int>(ego_frame.detections.size()));
        std::uint64_t sum_delivered = 0, sum_dropped = 0;
        for (const auto& p : participants) {
            auto it = latest.find(p.id);
            row.source_counts.push_back(
                it == latest.end() ? 0 : static_cast<int>(it->second.detections.size()));
            const auto st = p.channel.stats();
            sum_delivered += st.delivered;
            sum_dropped += st.dropped;
        }
        row.delivered = static_cast<int>(sum_delivered - prev_delivered);
        row.dropped = static_cast<int>(sum_dropped - prev_dropped);
        prev_delivered = sum_delivered;
        prev_dropped = sum_dropped;
        row.gap = tick_gap;
        result.rows.push_back(row);

        // --- integrate to the next tick ---
        world.agents[static_cast<std::size_t>(ego_id)] =
            step_kinematics(world.agents[static_cast<std::size_t>(ego_id)], u, world.dt);
        for (auto& rs : scripts) {
            const double v = rs.script->speed_at(now);
            rs.arc += v * world.dt;
            double heading = 0.0;
            const Vec2 pos = polyline_point(rs.pts, rs.arc, &heading);
            AgentState& a = world.agents[static_cast<std::size_t>(rs.agent)];
            a.pose = {pos.x, pos.y, normalize_angle(heading)};
            a.speed = v;
        }
        ++world.tick;
    }

    result.ticks = world.tick;
    result.duration = world.time();
    for (const auto& p : participants) {
        const auto st = p.channel.stats();
        result.channel.sent += st.sent;
        result.channel.delivered += st.delivered;
        result.channel.dropped += st.dropped;
        result.channel.in_flight += st.in_flight;
    }
    return result;
}

}  // namespace sim
}  // namespace coopsim
