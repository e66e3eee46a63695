#pragma once

#include <string>
#include <vector>

#include "coopsim/errors.hpp"
#include "coopsim/scenario.hpp"

namespace coopsim {
namespace scenario {

// --- map builders -----------------------------------------------------------

namespace detail {

// Append a straight lane sampled every `step` metres; returns the lane index.
inline int add_straight_lane(MapSpec& map, const std::string& id, Vec2 start, Vec2 dir,
                             double step, int count) {
    const int base = static_cast<int>(map.graph.nodes.size());
    Lane lane;
    lane.id = id;
    for (int i = 0; i < count; ++i) {
        map.graph.nodes.push_back(start + dir * (step * i));
        lane.nodes.push_back(base + i);
        if (i > 0) {
            LaneEdge e;
            e.from = base + i - 1;
            e.to = base + i;
            e.length = distance(map.graph.nodes[static_cast<std::size_t>(e.from)],
                                map.graph.nodes[static_cast<std::size_t>(e.to)]);
            map.graph.edges.push_back(e);
        }
    }
    map.graph.lanes.push_back(lane);
    return static_cast<int>(map.graph.lanes.size()) - 1;
}

// Four-way junction: an eastbound approach road crossed by a two-way
// north-south road, with a street-corner building and a parked truck that
// block the view from the eastbound approach into the southbound lane.
inline MapSpec intersection_map() {
    MapSpec map;
    add_straight_lane(map, "east", {-80.0, 0.0}, {1.0, 0.0}, 20.0, 9);
    add_straight_lane(map, "south", {-1.75, 70.0}, {0.0, -1.0}, 20.0, 8);
    add_straight_lane(map, "north", {1.75, -70.0}, {0.0, 1.0}, 20.0, 8);
    StaticObstacle building;
    building.pose = {-14.0, 22.5, 0.0};
    building.half = {9.0, 17.5};
    map.obstacles.push_back(building);
    StaticObstacle truck;  // parked across the corner, nose to the junction
    truck.pose = {-4.6, 10.0, kPi / 2.0};
    truck.half = {5.0, 1.25};
    map.obstacles.push_back(truck);
    return map;
}

inline MapSpec highway_map(bool with_left_lane) {
    MapSpec map;
    const int right = add_straight_lane(map, "right", {0.0, 0.0}, {1.0, 0.0}, 20.0, 13);
    if (with_left_lane) {
        const int left = add_straight_lane(map, "left", {0.0, 3.5}, {1.0, 0.0}, 20.0, 13);
        map.graph.lanes[static_cast<std::size_t>(right)].left = left;
        map.graph.lanes[static_cast<std::size_t>(left)].right = right;
    }
    return map;
}

inline MapSpec signal_map() {
    MapSpec map;
    add_straight_lane(map, "main", {0.0, 0.0}, {1.0, 0.0}, 20.0, 9);
    return map;
}

inline AgentSpec make_ego(Pose2D pose, double speed) {
    AgentSpec a;
    a.name = "ego";
    a.role = Role::Ego;
    a.pose = pose;
    a.speed = speed;
    a.sensor.fov_deg = 80.0;
    a.sensor.range = 60.0;
    return a;
}

inline AgentSpec make_scripted(const std::string& name, Pose2D pose, double speed,
                               const std::string& lane, double start_arc) {
    AgentSpec a;
    a.name = name;
    a.role = Role::Background;
    a.pose = pose;
    a.speed = speed;
    ScriptSpec s;
    s.lane = lane;
    s.start_arc = start_arc;
    s.speeds = {{0.0, speed}};
    a.script = s;
    return a;
}

inline AgentSpec make_spectator(const std::string& name, Pose2D pose, double fov, double range) {
    AgentSpec a;
    a.name = name;
    a.role = Role::Spectator;
    a.pose = pose;
    a.speed = 0.0;
    a.sensor.fov_deg = fov;
    a.sensor.range = range;
    return a;
}

inline AgentSpec make_rsu(const std::string& name, Pose2D pose, double fov, double range,
                          Vec2 half = {0.4, 0.4}) {
    AgentSpec a;
    a.name = name;
    a.role = Role::Rsu;
    a.pose = pose;
    a.speed = 0.0;
    a.half = half;
    a.mount = HeightClass::Elevated;
    a.sensor.fov_deg = fov;
    a.sensor.range = range;
    return a;
}

// Occluded-junction encounter shared by the cooperative scenarios: the ego
// approaches from the west while a vehicle bears down on the junction from
// the north behind the corner building, visible to the ego only at the last
// moment.  `incoming_speed` and the trigger-zone placement set how hard the
// timing is; participants differ per scenario.
inline ScenarioSpec junction_base(const std::string& name, double ego_x, double incoming_speed,
                                  Aabb zone_rect) {
    ScenarioSpec s;
    s.name = name;
    s.map = intersection_map();
    s.agents.push_back(make_ego({ego_x, 0.0, 0.0}, 8.0));
    s.agents.push_back(
        make_scripted("incoming", {-1.75, 60.0, -kPi / 2.0}, incoming_speed, "south", 10.0));
    s.ego.agent = "ego";
    s.ego.v_des = 8.0;
    s.ego.start_node = 0;  // x = -80 on the eastbound lane
    s.ego.goal_node = 6;   // x = +40
    planning::TriggerZone zone;
    zone.rect = zone_rect;
    s.trigger_zones.push_back(zone);
    s.adversary = "incoming";
    s.termination.timeout = 30.0;
    return s;
}

inline BackgroundSpec junction_queue(int count) {
    BackgroundSpec b;
    b.region = {{0.6, 10.0}, {3.0, 60.0}};  // snaps onto the northbound lane
    b.count = count;
    b.min_gap = 4.6;
    return b;
}

}  // namespace detail

// --- the built-in scenario set ----------------------------------------------

inline ScenarioSpec builtin(const std::string& name);

inline std::vector<std::string> builtin_names() {
    return {"coop1", "coop2", "coop3", "coop4", "coop5", "coop6",
            "coop7", "coop8", "pipeline1", "pipeline2", "pipeline3", "pipeline4"};
}

inline bool is_builtin(const std::string& name) {
    for (const auto& n : builtin_names())
        if (n == name) return true;
    return false;
}

inline ScenarioSpec builtin(const std::string& name) {
    using namespace detail;
    const Aabb near_zone{{-7.75, -4.0}, {4.25, 16.0}};   // 12 x 20 m over the conflict area
    const Aabb west_zone{{-10.5, -4.0}, {1.5, 16.0}};    // shifted clear of the parked queue
    const Aabb west_zone_fast{{-10.5, 1.0}, {1.5, 21.0}};

    if (name == "coop1") {
        ScenarioSpec s = junction_base("coop1", -62.55, 8.0, near_zone);
        s.agents.push_back(make_rsu("rsu1", {6.0, 6.0, 0.0}, 360.0, 70.0));
        s.ego.participants = {"rsu1"};
        validate(s);
        return s;
    }
    if (name == "coop2") {
        ScenarioSpec s = junction_base("coop2", -62.55, 8.0, near_zone);
        s.agents.push_back(make_spectator("observer", {2.5, 24.0, -kPi / 2.0}, 90.0, 70.0));
        s.ego.participants = {"observer"};
        validate(s);
        return s;
    }
    if (name == "coop3" || name == "coop4") {
        ScenarioSpec s;
        s.name = name;
        s.map = intersection_map();
        s.agents.push_back(make_ego({-55.0, 0.0, 0.0}, 8.0));
        if (name == "coop3") {
            s.agents.push_back(make_spectator("watch_a", {6.0, -10.0, kPi / 2.0}, 90.0, 60.0));
            s.agents.push_back(make_spectator("watch_b", {14.0, 34.0, kPi}, 90.0, 60.0));
            s.ego.participants = {"watch_a", "watch_b"};
        } else {
            s.agents.push_back(make_rsu("watch_a", {6.0, -10.0, kPi / 2.0}, 90.0, 60.0,
                                        {kDefaultHalfLength, kDefaultHalfWidth}));
            s.agents.push_back(make_rsu("watch_b", {14.0, 34.0, kPi}, 90.0, 60.0,
                                        {kDefaultHalfLength, kDefaultHalfWidth}));
            s.ego.participants = {"watch_a", "watch_b"};
        }
        s.ego.v_des = 8.0;
        s.ego.start_node = 0;
        s.ego.goal_node = 8;  // x = +80
        s.background = junction_queue(6);
        s.termination.timeout = 22.0;
        validate(s);
        return s;
    }
    if (name == "coop5" || name == "coop6" || name == "coop7" || name == "coop8") {
        const bool dense = (name == "coop5" || name == "coop7");
        const bool fast = (name == "coop7" || name == "coop8");
        ScenarioSpec s = junction_base(name, fast ? -48.3 : -62.55, fast ? 10.5 : 8.0,
                                       fast ? west_zone_fast : west_zone);
        s.agents.push_back(make_spectator("observer", {20.0, 28.0, kPi}, 100.0, 60.0));
        s.agents.push_back(make_rsu("rsu1", {6.0, 6.0, 0.0}, 360.0, 70.0));
        s.ego.participants = {"observer", "rsu1"};
        s.background = junction_queue(dense ? 6 : 4);
        s.termination.timeout = fast ? 25.0 : 30.0;
        validate(s);
        return s;
    }
    if (name == "pipeline1") {
        ScenarioSpec s;
        s.name = name;
        s.map = highway_map(true);
        s.agents.push_back(make_ego({0.0, 0.0, 0.0}, 10.0));
        // Overtaking needs surround sensing: a forward wedge cannot confirm
        // that the passed car has dropped behind before merging back.
        s.agents.back().sensor.fov_deg = 360.0;
        s.agents.push_back(make_scripted("lead_a", {40.0, 0.0, 0.0}, 4.0, "right", 40.0));
        s.agents.push_back(make_scripted("lead_b", {110.0, 0.0, 0.0}, 4.0, "right", 110.0));
        s.ego.v_des = 10.0;
        s.ego.start_node = 0;
        s.ego.goal_node = 11;  // x = 220 on the right lane
        s.termination.timeout = 35.0;
        validate(s);
        return s;
    }
    if (name == "pipeline2") {
        ScenarioSpec s;
        s.name = name;
        s.map = highway_map(false);
        s.agents.push_back(make_ego({0.0, 0.0, 0.0}, 8.0));
        s.agents.push_back(make_scripted("lead", {40.0, 0.0, 0.0}, 8.0, "right", 40.0));
        s.ego.v_des = 12.0;
        s.ego.start_node = 0;
        s.ego.goal_node = 12;  // x = 240; the run ends on the timeout instead
        s.termination.timeout = 15.0;
        validate(s);
        return s;
    }
    if (name == "pipeline3" || name == "pipeline4") {
        ScenarioSpec s;
        s.name = name;
        s.map = signal_map();
        perception::TrafficControl c;
        c.lane_id = "main";
        c.position = {60.0, 0.0};
        if (name == "pipeline3") {
            c.kind = perception::ControlKind::TrafficLight;
            c.phases = {{perception::LightState::Red, 6.0},
                        {perception::LightState::Green, 994.0}};
        } else {
            c.kind = perception::ControlKind::StopSign;
        }
        s.map.controls.push_back(c);
        s.agents.push_back(make_ego({40.0, 0.0, 0.0}, 8.0));
        s.ego.v_des = 10.0;
        s.ego.start_node = 2;  // x = 40
        s.ego.goal_node = 7;   // x = 140
        s.termination.timeout = 20.0;
        validate(s);
        return s;
    }
    throw UnknownScenarioError("unknown scenario '" + name + "'");
}

}  // namespace scenario
}  // namespace coopsim
