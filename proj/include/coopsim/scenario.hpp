#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coopsim/channel.hpp"
#include "coopsim/errors.hpp"
#include "coopsim/fusion.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/planning.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace scenario {

using json = nlohmann::json;

struct SensorSpec {
    double fov_deg = 80.0;
    double range = 60.0;
    Pose2D mount{};
    bool operator==(const SensorSpec&) const = default;
};

struct PerceptionSpec {
    perception::PerceptionMode mode = perception::PerceptionMode::Oracle;
    double p_detect = 1.0;
    double sigma_pos = 0.0;
    double sigma_ext = 0.0;
    bool operator==(const PerceptionSpec&) const = default;
};

// Scripted motion: follow a lane polyline at piecewise-constant speed.
struct ScriptSpec {
    std::string lane;
    double start_arc = 0.0;
    std::vector<std::pair<double, double>> speeds;  // (from_time, speed)
    bool operator==(const ScriptSpec&) const = default;

    double speed_at(double t) const {
        double v = speeds.empty() ? 0.0 : speeds.front().second;
        for (const auto& [from, s] : speeds) {
            if (t >= from) v = s;
        }
        return v;
    }
};

struct AgentSpec {
    std::string name;
    Role role = Role::Background;
    Pose2D pose{};
    double speed = 0.0;
    Vec2 half{kDefaultHalfLength, kDefaultHalfWidth};
    double wheelbase = kDefaultWheelbase;
    HeightClass mount = HeightClass::Ground;
    SensorSpec sensor{};
    PerceptionSpec perception{};
    std::optional<ScriptSpec> script;
    bool operator==(const AgentSpec&) const = default;
};

struct ChannelSpec {
    comms::LatencyModel latency = comms::NoLatency{};
    double drop_rate = 0.0;
    bool operator==(const ChannelSpec&) const = default;
};

struct EgoSpec {
    std::string agent = "ego";
    std::vector<std::string> participants;
    double v_des = 8.0;
    int start_node = 0;
    int goal_node = 0;
    fusion::FusionConfig fusion{};
    bool operator==(const EgoSpec&) const = default;
};

struct MapSpec {
    LaneGraph graph;
    std::vector<perception::TrafficControl> controls;
    std::vector<StaticObstacle> obstacles;
    bool operator==(const MapSpec&) const = default;
};

struct TerminationSpec {
    double timeout = 30.0;
    double goal_tolerance = 2.0;
    bool operator==(const TerminationSpec&) const = default;
};

struct BackgroundSpec {
    Aabb region{};
    int count = 0;
    double min_gap = 5.0;
    Vec2 half{kDefaultHalfLength, kDefaultHalfWidth};
    bool operator==(const BackgroundSpec&) const = default;
};

struct ScenarioSpec {
    std::string name;
    double dt = 0.05;
    double weather = 1.0;
    MapSpec map;
    std::vector<AgentSpec> agents;
    EgoSpec ego;
    ChannelSpec default_channel{};
    std::map<std::string, ChannelSpec> channel_overrides;
    std::vector<planning::TriggerZone> trigger_zones;
    TerminationSpec termination{};
    std::optional<std::string> adversary;
    std::optional<BackgroundSpec> background;
    bool operator==(const ScenarioSpec&) const = default;
};

// --- parsing helpers ---

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

inline const json& member(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path + "." + key, "missing required key");
    return *it;
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path, "expected a number");
    return j.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback,
                        const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return get_number(*it, path + "." + key);
}

inline int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
    return j.get<int>();
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ValidationError(path, "expected a string");
    return j.get<std::string>();
}

inline Vec2 parse_vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw ValidationError(path, "expected [x, y]");
    return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]")};
}

inline Pose2D parse_pose(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(path, "expected [x, y, yaw]");
    return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]"),
            get_number(j[2], path + "[2]")};
}

inline Aabb parse_aabb(const json& j, const std::string& path) {
    check_keys(j, {"min", "max"}, path);
    return {parse_vec2(member(j, "min", path), path + ".min"),
            parse_vec2(member(j, "max", path), path + ".max")};
}

inline json dump_vec2(Vec2 v) { return json::array({v.x, v.y}); }
inline json dump_pose(const Pose2D& p) { return json::array({p.x, p.y, p.yaw}); }
inline json dump_aabb(const Aabb& a) {
    return json{{"min", dump_vec2(a.min)}, {"max", dump_vec2(a.max)}};
}

inline Role parse_role(const std::string& s, const std::string& path) {
    if (s == "ego") return Role::Ego;
    if (s == "spectator") return Role::Spectator;
    if (s == "rsu") return Role::Rsu;
    if (s == "background") return Role::Background;
    if (s == "pedestrian") return Role::Pedestrian;
    throw ValidationError(path, "unknown role '" + s + "'");
}

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Ego: return "ego";
        case Role::Spectator: return "spectator";
        case Role::Rsu: return "rsu";
        case Role::Background: return "background";
        case Role::Pedestrian: return "pedestrian";
    }
    return "?";
}

inline HeightClass parse_height(const std::string& s, const std::string& path) {
    if (s == "ground") return HeightClass::Ground;
    if (s == "elevated") return HeightClass::Elevated;
    throw ValidationError(path, "unknown height class '" + s + "'");
}

inline perception::LightState parse_light(const std::string& s, const std::string& path) {
    if (s == "red") return perception::LightState::Red;
    if (s == "yellow") return perception::LightState::Yellow;
    if (s == "green") return perception::LightState::Green;
    throw ValidationError(path, "unknown light state '" + s + "'");
}

inline const char* light_name(perception::LightState s) {
    switch (s) {
        case perception::LightState::Red: return "red";
        case perception::LightState::Yellow: return "yellow";
        case perception::LightState::Green: return "green";
    }
    return "?";
}

inline comms::LatencyModel parse_latency(const json& j, const std::string& path) {
    check_keys(j, {"model", "delay", "lo", "hi"}, path);
    const std::string model = get_string(member(j, "model", path), path + ".model");
    if (model == "none") return comms::NoLatency{};
    if (model == "deterministic")
        return comms::DeterministicLatency{get_number(member(j, "delay", path), path + ".delay")};
    if (model == "uniform")
        return comms::UniformLatency{get_number(member(j, "lo", path), path + ".lo"),
                                     get_number(member(j, "hi", path), path + ".hi")};
    throw ValidationError(path + ".model", "unknown latency model '" + model + "'");
}

inline json dump_latency(const comms::LatencyModel& m) {
    if (std::holds_alternative<comms::NoLatency>(m)) return json{{"model", "none"}};
    if (const auto* d = std::get_if<comms::DeterministicLatency>(&m))
        return json{{"model", "deterministic"}, {"delay", d->delay}};
    const auto& u = std::get<comms::UniformLatency>(m);
    return json{{"model", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
}

inline ChannelSpec parse_channel(const json& j, const std::string& path) {
    check_keys(j, {"latency", "drop_rate"}, path);
    ChannelSpec c;
    if (j.contains("latency")) c.latency = parse_latency(j["latency"], path + ".latency");
    c.drop_rate = number_or(j, "drop_rate", 0.0, path);
    return c;
}

inline json dump_channel(const ChannelSpec& c) {
    return json{{"latency", dump_latency(c.latency)}, {"drop_rate", c.drop_rate}};
}

}  // namespace detail

// --- document parsing ---

inline ScenarioSpec parse(const json& root);

inline ScenarioSpec from_document(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario document is not valid JSON: ") + e.what());
    }
    return parse(root);
}

inline json to_json(const ScenarioSpec& spec);

inline std::string to_document(const ScenarioSpec& spec) { return to_json(spec).dump(2) + "\n"; }

inline void validate(const ScenarioSpec& spec);

inline ScenarioSpec parse(const json& root) {
    using namespace detail;
    if (!root.is_object()) throw ValidationError("", "scenario document must be an object");
    check_keys(root,
               {"name", "dt", "weather", "map", "agents", "ego", "channel", "trigger_zones",
                "termination", "adversary", "background"},
               "");
    ScenarioSpec spec;
    spec.name = get_string(member(root, "name", ""), "name");
    spec.dt = number_or(root, "dt", 0.05, "");
    spec.weather = number_or(root, "weather", 1.0, "");

    // map
    const json& jmap = member(root, "map", "");
    check_keys(jmap, {"nodes", "edges", "lanes", "controls", "obstacles"}, "map");
    const json& jnodes = member(jmap, "nodes", "map");
    if (!jnodes.is_array()) throw ValidationError("map.nodes", "expected an array");
    for (std::size_t i = 0; i < jnodes.size(); ++i)
        spec.map.graph.nodes.push_back(parse_vec2(jnodes[i], "map.nodes[" + std::to_string(i) + "]"));
    const json& jedges = member(jmap, "edges", "map");
    if (!jedges.is_array()) throw ValidationError("map.edges", "expected an array");
    for (std::size_t i = 0; i < jedges.size(); ++i) {
        const std::string path = "map.edges[" + std::to_string(i) + "]";
        check_keys(jedges[i], {"from", "to"}, path);
        LaneEdge e;
        e.from = get_int(member(jedges[i], "from", path), path + ".from");
        e.to = get_int(member(jedges[i], "to", path), path + ".to");
        const int n = static_cast<int>(spec.map.graph.nodes.size());
        if (e.from < 0 || e.from >= n) throw ValidationError(path + ".from", "node does not exist");
        if (e.to < 0 || e.to >= n) throw ValidationError(path + ".to", "node does not exist");
        e.length = distance(spec.map.graph.nodes[static_cast<std::size_t>(e.from)],
                            spec.map.graph.nodes[static_cast<std::size_t>(e.to)]);
        spec.map.graph.edges.push_back(e);
    }
    const json& jlanes = member(jmap, "lanes", "map");
    if (!jlanes.is_array()) throw ValidationError("map.lanes", "expected an array");
    std::vector<std::pair<std::string, std::string>> neighbor_refs;  // (left, right) by lane
    for (std::size_t i = 0; i < jlanes.size(); ++i) {
        const std::string path = "map.lanes[" + std::to_string(i) + "]";
        check_keys(jlanes[i], {"id", "nodes", "left", "right"}, path);
        Lane lane;
        lane.id = get_string(member(jlanes[i], "id", path), path + ".id");
        const json& jn = member(jlanes[i], "nodes", path);
        if (!jn.is_array()) throw ValidationError(path + ".nodes", "expected an array");
        for (std::size_t k = 0; k < jn.size(); ++k) {
            const int node = get_int(jn[k], path + ".nodes[" + std::to_string(k) + "]");
            if (node < 0 || node >= static_cast<int>(spec.map.graph.nodes.size()))
                throw ValidationError(path + ".nodes[" + std::to_string(k) + "]",
                                      "node does not exist");
            lane.nodes.push_back(node);
        }
        std::string left, right;
        if (jlanes[i].contains("left")) left = get_string(jlanes[i]["left"], path + ".left");
        if (jlanes[i].contains("right")) right = get_string(jlanes[i]["right"], path + ".right");
        neighbor_refs.emplace_back(left, right);
        spec.map.graph.lanes.push_back(lane);
    }
    for (std::size_t i = 0; i < neighbor_refs.size(); ++i) {
        const std::string path = "map.lanes[" + std::to_string(i) + "]";
        const auto& [left, right] = neighbor_refs[i];
        if (!left.empty()) {
            const int idx = spec.map.graph.lane_index(left);
            if (idx < 0) throw ValidationError(path + ".left", "lane '" + left + "' does not exist");
            spec.map.graph.lanes[i].left = idx;
        }
        if (!right.empty()) {
            const int idx = spec.map.graph.lane_index(right);
            if (idx < 0)
                throw ValidationError(path + ".right", "lane '" + right + "' does not exist");
            spec.map.graph.lanes[i].right = idx;
        }
    }
    if (jmap.contains("controls")) {
        const json& jc = jmap["controls"];
        if (!jc.is_array()) throw ValidationError("map.controls", "expected an array");
        for (std::size_t i = 0; i < jc.size(); ++i) {
            const std::string path = "map.controls[" + std::to_string(i) + "]";
            check_keys(jc[i], {"kind", "lane", "position", "phases"}, path);
            perception::TrafficControl c;
            const std::string kind = get_string(member(jc[i], "kind", path), path + ".kind");
            if (kind == "traffic_light")
                c.kind = perception::ControlKind::TrafficLight;
            else if (kind == "stop_sign")
                c.kind = perception::ControlKind::StopSign;
            else
                throw ValidationError(path + ".kind", "unknown control kind '" + kind + "'");
            c.lane_id = get_string(member(jc[i], "lane", path), path + ".lane");
            if (spec.map.graph.lane_index(c.lane_id) < 0)
                throw ValidationError(path + ".lane", "lane '" + c.lane_id + "' does not exist");
            c.position = parse_vec2(member(jc[i], "position", path), path + ".position");
            if (jc[i].contains("phases")) {
                const json& jp = jc[i]["phases"];
                if (!jp.is_array()) throw ValidationError(path + ".phases", "expected an array");
                for (std::size_t k = 0; k < jp.size(); ++k) {
                    const std::string ppath = path + ".phases[" + std::to_string(k) + "]";
                    if (!jp[k].is_array() || jp[k].size() != 2)
                        throw ValidationError(ppath, "expected [state, duration]");
                    perception::LightPhase phase;
                    phase.state = parse_light(get_string(jp[k][0], ppath + "[0]"), ppath + "[0]");
                    phase.duration = get_number(jp[k][1], ppath + "[1]");
                    c.phases.push_back(phase);
                }
            }
            if (c.kind == perception::ControlKind::TrafficLight && c.phases.empty())
                throw ValidationError(path + ".phases", "traffic light needs a phase schedule");
            spec.map.controls.push_back(c);
        }
    }
    if (jmap.contains("obstacles")) {
        const json& jo = jmap["obstacles"];
        if (!jo.is_array()) throw ValidationError("map.obstacles", "expected an array");
        for (std::size_t i = 0; i < jo.size(); ++i) {
            const std::string path = "map.obstacles[" + std::to_string(i) + "]";
            check_keys(jo[i], {"pose", "half_extents", "height"}, path);
            StaticObstacle o;
            o.pose = parse_pose(member(jo[i], "pose", path), path + ".pose");
            o.half = parse_vec2(member(jo[i], "half_extents", path), path + ".half_extents");
            if (jo[i].contains("height"))
                o.height = parse_height(get_string(jo[i]["height"], path + ".height"),
                                        path + ".height");
            spec.map.obstacles.push_back(o);
        }
    }

    // agents
    const json& jagents = member(root, "agents", "");
    if (!jagents.is_array()) throw ValidationError("agents", "expected an array");
    for (std::size_t i = 0; i < jagents.size(); ++i) {
        const std::string path = "agents[" + std::to_string(i) + "]";
        check_keys(jagents[i],
                   {"name", "role", "pose", "speed", "half_extents", "wheelbase", "mount",
                    "sensor", "perception", "script"},
                   path);
        AgentSpec a;
        a.name = get_string(member(jagents[i], "name", path), path + ".name");
        a.role = parse_role(get_string(member(jagents[i], "role", path), path + ".role"),
                            path + ".role");
        a.pose = parse_pose(member(jagents[i], "pose", path), path + ".pose");
        a.speed = number_or(jagents[i], "speed", 0.0, path);
        if (jagents[i].contains("half_extents"))
            a.half = parse_vec2(jagents[i]["half_extents"], path + ".half_extents");
        a.wheelbase = number_or(jagents[i], "wheelbase", kDefaultWheelbase, path);
        if (jagents[i].contains("mount"))
            a.mount = parse_height(get_string(jagents[i]["mount"], path + ".mount"),
                                   path + ".mount");
        else if (a.role == Role::Rsu)
            a.mount = HeightClass::Elevated;
        if (jagents[i].contains("sensor")) {
            const json& js = jagents[i]["sensor"];
            const std::string spath = path + ".sensor";
            detail::check_keys(js, {"fov_deg", "range", "mount_pose"}, spath);
            a.sensor.fov_deg = number_or(js, "fov_deg", 80.0, spath);
            a.sensor.range = number_or(js, "range", 60.0, spath);
            if (js.contains("mount_pose"))
                a.sensor.mount = parse_pose(js["mount_pose"], spath + ".mount_pose");
        }
        if (jagents[i].contains("perception")) {
            const json& jp = jagents[i]["perception"];
            const std::string ppath = path + ".perception";
            detail::check_keys(jp, {"mode", "p_detect", "sigma_pos", "sigma_ext"}, ppath);
            const std::string mode = get_string(member(jp, "mode", ppath), ppath + ".mode");
            if (mode == "oracle") {
                a.perception.mode = perception::PerceptionMode::Oracle;
                a.perception.p_detect = number_or(jp, "p_detect", 1.0, ppath);
                a.perception.sigma_pos = number_or(jp, "sigma_pos", 0.0, ppath);
                a.perception.sigma_ext = number_or(jp, "sigma_ext", 0.0, ppath);
            } else if (mode == "noisy") {
                a.perception.mode = perception::PerceptionMode::Noisy;
                a.perception.p_detect = number_or(jp, "p_detect", 0.9, ppath);
                a.perception.sigma_pos = number_or(jp, "sigma_pos", 0.3, ppath);
                a.perception.sigma_ext = number_or(jp, "sigma_ext", 0.1, ppath);
            } else {
                throw ValidationError(ppath + ".mode", "unknown perception mode '" + mode + "'");
            }
        }
        if (jagents[i].contains("script")) {
            const json& js = jagents[i]["script"];
            const std::string spath = path + ".script";
            detail::check_keys(js, {"lane", "start_arc", "speeds"}, spath);
            ScriptSpec s;
            s.lane = get_string(member(js, "lane", spath), spath + ".lane");
            if (spec.map.graph.lane_index(s.lane) < 0)
                throw ValidationError(spath + ".lane", "lane '" + s.lane + "' does not exist");
            s.start_arc = number_or(js, "start_arc", 0.0, spath);
            const json& jsp = member(js, "speeds", spath);
            if (!jsp.is_array() || jsp.empty())
                throw ValidationError(spath + ".speeds", "expected a non-empty array");
            for (std::size_t k = 0; k < jsp.size(); ++k) {
                const std::string kpath = spath + ".speeds[" + std::to_string(k) + "]";
                if (!jsp[k].is_array() || jsp[k].size() != 2)
                    throw ValidationError(kpath, "expected [from_time, speed]");
                s.speeds.emplace_back(get_number(jsp[k][0], kpath + "[0]"),
                                      get_number(jsp[k][1], kpath + "[1]"));
            }
            a.script = s;
        }
        spec.agents.push_back(a);
    }

    // ego
    const json& jego = member(root, "ego", "");
    check_keys(jego, {"agent", "participants", "v_des", "start_node", "goal_node", "fusion"},
               "ego");
    spec.ego.agent = get_string(member(jego, "agent", "ego"), "ego.agent");
    if (jego.contains("participants")) {
        const json& jp = jego["participants"];
        if (!jp.is_array()) throw ValidationError("ego.participants", "expected an array");
        for (std::size_t i = 0; i < jp.size(); ++i)
            spec.ego.participants.push_back(
                get_string(jp[i], "ego.participants[" + std::to_string(i) + "]"));
    }
    spec.ego.v_des = number_or(jego, "v_des", 8.0, "ego");
    spec.ego.start_node = get_int(member(jego, "start_node", "ego"), "ego.start_node");
    spec.ego.goal_node = get_int(member(jego, "goal_node", "ego"), "ego.goal_node");
    if (jego.contains("fusion")) {
        const json& jf = jego["fusion"];
        detail::check_keys(jf, {"iou_threshold", "stale_horizon"}, "ego.fusion");
        spec.ego.fusion.iou_threshold = number_or(jf, "iou_threshold", 0.3, "ego.fusion");
        spec.ego.fusion.stale_horizon = number_or(jf, "stale_horizon", 1.0, "ego.fusion");
    }

    // channel
    if (root.contains("channel")) {
        const json& jc = root["channel"];
        check_keys(jc, {"default", "overrides"}, "channel");
        if (jc.contains("default"))
            spec.default_channel = detail::parse_channel(jc["default"], "channel.default");
        if (jc.contains("overrides")) {
            const json& jo = jc["overrides"];
            if (!jo.is_object()) throw ValidationError("channel.overrides", "expected an object");
            for (const auto& [name, body] : jo.items())
                spec.channel_overrides[name] =
                    detail::parse_channel(body, "channel.overrides." + name);
        }
    }

    // trigger zones
    if (root.contains("trigger_zones")) {
        const json& jz = root["trigger_zones"];
        if (!jz.is_array()) throw ValidationError("trigger_zones", "expected an array");
        for (std::size_t i = 0; i < jz.size(); ++i) {
            const std::string path = "trigger_zones[" + std::to_string(i) + "]";
            check_keys(jz[i], {"rect", "t_on", "t_off"}, path);
            planning::TriggerZone z;
            z.rect = parse_aabb(member(jz[i], "rect", path), path + ".rect");
            z.t_on = number_or(jz[i], "t_on", 0.0, path);
            z.t_off = number_or(jz[i], "t_off", planning::kInf, path);
            spec.trigger_zones.push_back(z);
        }
    }

    // termination
    if (root.contains("termination")) {
        const json& jt = root["termination"];
        check_keys(jt, {"timeout", "goal_tolerance"}, "termination");
        spec.termination.timeout = number_or(jt, "timeout", 30.0, "termination");
        spec.termination.goal_tolerance = number_or(jt, "goal_tolerance", 2.0, "termination");
    }

    if (root.contains("adversary"))
        spec.adversary = detail::get_string(root["adversary"], "adversary");

    if (root.contains("background")) {
        const json& jb = root["background"];
        check_keys(jb, {"region", "count", "min_gap", "half_extents"}, "background");
        BackgroundSpec b;
        b.region = parse_aabb(member(jb, "region", "background"), "background.region");
        b.count = get_int(member(jb, "count", "background"), "background.count");
        b.min_gap = number_or(jb, "min_gap", 5.0, "background");
        if (jb.contains("half_extents"))
            b.half = parse_vec2(jb["half_extents"], "background.half_extents");
        spec.background = b;
    }

    validate(spec);
    return spec;
}

inline json to_json(const ScenarioSpec& spec) {
    using namespace detail;
    json root;
    root["name"] = spec.name;
    root["dt"] = spec.dt;
    root["weather"] = spec.weather;

    json jmap;
    jmap["nodes"] = json::array();
    for (const Vec2& n : spec.map.graph.nodes) jmap["nodes"].push_back(dump_vec2(n));
    jmap["edges"] = json::array();
    for (const LaneEdge& e : spec.map.graph.edges)
        jmap["edges"].push_back(json{{"from", e.from}, {"to", e.to}});
    jmap["lanes"] = json::array();
    for (const Lane& lane : spec.map.graph.lanes) {
        json jl{{"id", lane.id}, {"nodes", lane.nodes}};
        if (lane.left >= 0) jl["left"] = spec.map.graph.lanes[static_cast<std::size_t>(lane.left)].id;
        if (lane.right >= 0)
            jl["right"] = spec.map.graph.lanes[static_cast<std::size_t>(lane.right)].id;
        jmap["lanes"].push_back(jl);
    }
    jmap["controls"] = json::array();
    for (const auto& c : spec.map.controls) {
        json jc{{"kind", c.kind == perception::ControlKind::TrafficLight ? "traffic_light"
                                                                         : "stop_sign"},
                {"lane", c.lane_id},
                {"position", dump_vec2(c.position)}};
        if (!c.phases.empty()) {
            json jp = json::array();
            for (const auto& p : c.phases)
                jp.push_back(json::array({light_name(p.state), p.duration}));
            jc["phases"] = jp;
        }
        jmap["controls"].push_back(jc);
    }
    jmap["obstacles"] = json::array();
    for (const auto& o : spec.map.obstacles) {
        jmap["obstacles"].push_back(
            json{{"pose", dump_pose(o.pose)},
                 {"half_extents", dump_vec2(o.half)},
                 {"height", o.height == HeightClass::Elevated ? "elevated" : "ground"}});
    }
    root["map"] = jmap;

    root["agents"] = json::array();
    for (const AgentSpec& a : spec.agents) {
        json ja{{"name", a.name},
                {"role", role_name(a.role)},
                {"pose", dump_pose(a.pose)},
                {"speed", a.speed},
                {"half_extents", dump_vec2(a.half)},
                {"wheelbase", a.wheelbase},
                {"mount", a.mount == HeightClass::Elevated ? "elevated" : "ground"},
                {"sensor",
                 json{{"fov_deg", a.sensor.fov_deg},
                      {"range", a.sensor.range},
                      {"mount_pose", dump_pose(a.sensor.mount)}}},
                {"perception",
                 json{{"mode",
                       a.perception.mode == perception::PerceptionMode::Oracle ? "oracle"
                                                                               : "noisy"},
                      {"p_detect", a.perception.p_detect},
                      {"sigma_pos", a.perception.sigma_pos},
                      {"sigma_ext", a.perception.sigma_ext}}}};
        if (a.script) {
            json js{{"lane", a.script->lane}, {"start_arc", a.script->start_arc}};
            json jsp = json::array();
            for (const auto& [t, v] : a.script->speeds) jsp.push_back(json::array({t, v}));
            js["speeds"] = jsp;
            ja["script"] = js;
        }
        root["agents"].push_back(ja);
    }

    root["ego"] = json{{"agent", spec.ego.agent},
                       {"participants", spec.ego.participants},
                       {"v_des", spec.ego.v_des},
                       {"start_node", spec.ego.start_node},
                       {"goal_node", spec.ego.goal_node},
                       {"fusion",
                        json{{"iou_threshold", spec.ego.fusion.iou_threshold},
                             {"stale_horizon", spec.ego.fusion.stale_horizon}}}};

    json jch{{"default", dump_channel(spec.default_channel)}};
    if (!spec.channel_overrides.empty()) {
        json jo;
        for (const auto& [name, c] : spec.channel_overrides) jo[name] = dump_channel(c);
        jch["overrides"] = jo;
    }
    root["channel"] = jch;

    root["trigger_zones"] = json::array();
    for (const auto& z : spec.trigger_zones) {
        json jz{{"rect", dump_aabb(z.rect)}, {"t_on", z.t_on}};
        if (z.t_off != planning::kInf) jz["t_off"] = z.t_off;
        root["trigger_zones"].push_back(jz);
    }

    root["termination"] = json{{"timeout", spec.termination.timeout},
                               {"goal_tolerance", spec.termination.goal_tolerance}};
    if (spec.adversary) root["adversary"] = *spec.adversary;
    if (spec.background) {
        root["background"] = json{{"region", dump_aabb(spec.background->region)},
                                  {"count", spec.background->count},
                                  {"min_gap", spec.background->min_gap},
                                  {"half_extents", dump_vec2(spec.background->half)}};
    }
    return root;
}

// Referential and domain checks that hold for any runnable scenario.
inline void validate(const ScenarioSpec& spec) {
    if (spec.name.empty()) throw ValidationError("name", "must not be empty");
    if (!(spec.dt > 0.0)) throw ValidationError("dt", "must be > 0");
    if (!(spec.weather > 0.0) || spec.weather > 1.0)
        throw ValidationError("weather", "must be in (0, 1]");
    try {
        validate_lane_graph(spec.map.graph);
    } catch (const DomainError& e) {
        throw ValidationError("map", e.what());
    }
    // Lane polylines must be simple: non-adjacent segments may not cross.
    for (std::size_t li = 0; li < spec.map.graph.lanes.size(); ++li) {
        const auto pts = spec.map.graph.lane_points(static_cast<int>(li));
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
                const Vec2 a = pts[i], b = pts[i + 1], c = pts[j], d = pts[j + 1];
                const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
                const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
                const bool properly = ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
                if (properly && !(j == i + 1))
                    throw ValidationError("map.lanes[" + std::to_string(li) + "]",
                                          "lane polyline crosses itself");
            }
        }
    }

    std::set<std::string> names;
    int ego_index = -1;
    for (std::size_t i = 0; i < spec.agents.size(); ++i) {
        const AgentSpec& a = spec.agents[i];
        const std::string path = "agents[" + std::to_string(i) + "]";
        if (a.name.empty()) throw ValidationError(path + ".name", "must not be empty");
        if (!names.insert(a.name).second)
            throw ValidationError(path + ".name", "duplicate agent name '" + a.name + "'");
        if (!(a.sensor.fov_deg > 0.0) || a.sensor.fov_deg > 360.0)
            throw ValidationError(path + ".sensor.fov_deg", "must be in (0, 360]");
        if (!(a.sensor.range > 0.0))
            throw ValidationError(path + ".sensor.range", "must be > 0");
        if (a.speed < 0.0) throw ValidationError(path + ".speed", "must be >= 0");
        if (!(a.half.x > 0.0) || !(a.half.y > 0.0))
            throw ValidationError(path + ".half_extents", "must be positive");
        if (!(a.wheelbase > 0.0)) throw ValidationError(path + ".wheelbase", "must be > 0");
        if (a.perception.p_detect < 0.0 || a.perception.p_detect > 1.0)
            throw ValidationError(path + ".perception.p_detect", "must be in [0, 1]");
        if (a.perception.sigma_pos < 0.0 || a.perception.sigma_ext < 0.0)
            throw ValidationError(path + ".perception", "noise sigmas must be >= 0");
        if (a.perception.mode == perception::PerceptionMode::Oracle &&
            (a.perception.p_detect != 1.0 || a.perception.sigma_pos != 0.0 ||
             a.perception.sigma_ext != 0.0))
            throw ValidationError(path + ".perception",
                                  "oracle mode requires p_detect = 1 and zero noise");
        if (a.name == spec.ego.agent) {
            ego_index = static_cast<int>(i);
            if (a.role != Role::Ego)
                throw ValidationError(path + ".role", "the ego agent must have role 'ego'");
        }
    }
    if (ego_index < 0)
        throw ValidationError("ego.agent", "agent '" + spec.ego.agent + "' does not exist");
    for (std::size_t i = 0; i < spec.ego.participants.size(); ++i) {
        const std::string& p = spec.ego.participants[i];
        const std::string path = "ego.participants[" + std::to_string(i) + "]";
        if (!names.count(p)) throw ValidationError(path, "agent '" + p + "' does not exist");
        if (p == spec.ego.agent)
            throw ValidationError(path, "the ego cannot be its own participant");
    }
    const int n = static_cast<int>(spec.map.graph.nodes.size());
    if (spec.ego.start_node < 0 || spec.ego.start_node >= n)
        throw ValidationError("ego.start_node", "node does not exist");
    if (spec.ego.goal_node < 0 || spec.ego.goal_node >= n)
        throw ValidationError("ego.goal_node", "node does not exist");
    if (!(spec.ego.v_des > 0.0)) throw ValidationError("ego.v_des", "must be > 0");
    if (spec.ego.fusion.iou_threshold <= 0.0 || spec.ego.fusion.iou_threshold > 1.0)
        throw ValidationError("ego.fusion.iou_threshold", "must be in (0, 1]");
    if (spec.ego.fusion.stale_horizon < 0.0)
        throw ValidationError("ego.fusion.stale_horizon", "must be >= 0");

    auto check_channel = [](const ChannelSpec& c, const std::string& path) {
        if (c.drop_rate < 0.0 || c.drop_rate > 1.0)
            throw ValidationError(path + ".drop_rate", "must be in [0, 1]");
        if (const auto* d = std::get_if<comms::DeterministicLatency>(&c.latency)) {
            if (d->delay < 0.0) throw ValidationError(path + ".latency.delay", "must be >= 0");
        } else if (const auto* u = std::get_if<comms::UniformLatency>(&c.latency)) {
            if (u->lo < 0.0 || u->hi < u->lo)
                throw ValidationError(path + ".latency", "requires 0 <= lo <= hi");
        }
    };
    check_channel(spec.default_channel, "channel.default");
    for (const auto& [name, c] : spec.channel_overrides) {
        if (!names.count(name))
            throw ValidationError("channel.overrides." + name,
                                  "agent '" + name + "' does not exist");
        check_channel(c, "channel.overrides." + name);
    }

    for (std::size_t i = 0; i < spec.trigger_zones.size(); ++i) {
        const auto& z = spec.trigger_zones[i];
        const std::string path = "trigger_zones[" + std::to_string(i) + "]";
        if (z.rect.max.x < z.rect.min.x || z.rect.max.y < z.rect.min.y)
            throw ValidationError(path + ".rect", "max must not be below min");
        if (z.t_off < z.t_on) throw ValidationError(path, "t_off must be >= t_on");
    }
    if (!(spec.termination.timeout > 0.0))
        throw ValidationError("termination.timeout", "must be > 0");
    if (!(spec.termination.goal_tolerance > 0.0))
        throw ValidationError("termination.goal_tolerance", "must be > 0");
    if (spec.adversary && !names.count(*spec.adversary))
        throw ValidationError("adversary", "agent '" + *spec.adversary + "' does not exist");
    if (spec.background) {
        if (spec.background->count < 0)
            throw ValidationError("background.count", "must be >= 0");
        if (!(spec.background->min_gap >= 0.0))
            throw ValidationError("background.min_gap", "must be >= 0");
        const Aabb& r = spec.background->region;
        if (r.max.x < r.min.x || r.max.y < r.min.y)
            throw ValidationError("background.region", "max must not be below min");
    }
}

}  // namespace scenario
}  // namespace coopsim
