#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/rng.hpp"
#include "coopsim/sensing.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace perception {

using BoundingBox2D = OrientedBox;

struct Detection {
    BoundingBox2D box{};
    double confidence = 1.0;
    std::optional<int> truth_id;  // populated only in oracle mode
};

struct DetectionFrame {
    int source_id = -1;
    double stamp = 0.0;
    std::vector<Detection> detections;
};

enum class PerceptionMode { Oracle, Noisy };

struct PerceptionConfig {
    PerceptionMode mode = PerceptionMode::Oracle;
    double p_detect = 0.9;
    double sigma_pos = 0.3;   // center jitter std dev, per axis
    double sigma_ext = 0.1;   // half-extent jitter std dev, per component
};

inline constexpr double kMinHalfExtent = 0.2;

// Detector stand-in. Oracle mode reports exact footprints and consumes no
// randomness; Noisy mode drops targets with probability 1 - p_detect and
// jitters the survivors. Draw order per visible target is fixed (detect,
// dx, dy, dl, dw, confidence) so substreams replay exactly.
inline DetectionFrame perceive(const AgentState& observer, const sensing::SensorConfig& sensor,
                               const PerceptionConfig& cfg, const WorldState& world,
                               RngStream& rng) {
    DetectionFrame frame;
    frame.source_id = observer.id;
    frame.stamp = world.time();
    const auto visible = sensing::visible_targets(observer, sensor, world);
    for (int id : visible) {
        const AgentState& target = world.agents[static_cast<std::size_t>(id)];
        if (cfg.mode == PerceptionMode::Oracle) {
            Detection det;
            det.box = {target.pose.position(), target.half, target.pose.yaw};
            det.confidence = 1.0;
            det.truth_id = id;
            frame.detections.push_back(det);
        } else {
            if (!rng.bernoulli(cfg.p_detect)) continue;
            Detection det;
            det.box.center = {target.pose.x + rng.normal(0.0, cfg.sigma_pos),
                              target.pose.y + rng.normal(0.0, cfg.sigma_pos)};
            det.box.half = {std::max(kMinHalfExtent, target.half.x + rng.normal(0.0, cfg.sigma_ext)),
                            std::max(kMinHalfExtent, target.half.y + rng.normal(0.0, cfg.sigma_ext))};
            det.box.yaw = target.pose.yaw;
            det.confidence = rng.uniform(0.5, 1.0);
            frame.detections.push_back(det);
        }
    }
    return frame;
}

// --- traffic control sensing ---

enum class ControlKind { TrafficLight, StopSign };
enum class LightState { Red, Yellow, Green };

struct LightPhase {
    LightState state = LightState::Red;
    double duration = 0.0;  // seconds
    bool operator==(const LightPhase&) const = default;
};

struct TrafficControl {
    ControlKind kind = ControlKind::StopSign;
    std::string lane_id;
    Vec2 position{};
    std::vector<LightPhase> phases;  // cycles; empty for stop signs

    bool operator==(const TrafficControl&) const = default;

    LightState state_at(double t) const {
        if (phases.empty()) return LightState::Red;
        double cycle = 0.0;
        for (const LightPhase& p : phases) cycle += p.duration;
        if (cycle <= 0.0) return phases.front().state;
        double u = std::fmod(t, cycle);
        for (const LightPhase& p : phases) {
            if (u < p.duration) return p.state;
            u -= p.duration;
        }
        return phases.back().state;
    }
};

struct ControlObservation {
    ControlKind kind = ControlKind::StopSign;
    LightState light = LightState::Red;  // meaningful for lights only
    double distance = 0.0;               // arc length along the lane, >= 0
    std::size_t control_index = 0;       // index into the world control list
};

// Nearest control point ahead of the observer on its current lane, within
// sensing range and with line of sight. "Ahead" is measured along the lane.
inline std::optional<ControlObservation> sense_traffic_control(
    const AgentState& observer, const sensing::SensorConfig& sensor, const WorldState& world,
    const std::vector<TrafficControl>& controls) {
    const int lane = world.lanes.nearest_lane(observer.pose.position());
    if (lane < 0) return std::nullopt;
    const std::string& lane_id = world.lanes.lanes[static_cast<std::size_t>(lane)].id;
    const auto pts = world.lanes.lane_points(lane);
    if (pts.size() < 2) return std::nullopt;
    const auto self = project_onto_polyline(pts, observer.pose.position());
    const double eff_range = sensor.range * world.weather;

    std::optional<ControlObservation> best;
    for (std::size_t i = 0; i < controls.size(); ++i) {
        const TrafficControl& c = controls[i];
        if (c.lane_id != lane_id) continue;
        const auto proj = project_onto_polyline(pts, c.position);
        const double ahead = proj.arc - self.arc;
        if (ahead < 0.0) continue;
        if (distance(observer.pose.position(), c.position) > eff_range) continue;
        const auto occ = sensing::occluders_between(world, observer.id, -1);
        if (!sensing::line_of_sight(sensing::sensor_pose(observer, sensor).position(), c.position,
                                    occ, sensor.height))
            continue;
        if (!best || ahead < best->distance) {
            ControlObservation obs;
            obs.kind = c.kind;
            obs.light = c.state_at(world.time());
            obs.distance = ahead;
            obs.control_index = i;
            best = obs;
        }
    }
    return best;
}

}  // namespace perception
}  // namespace coopsim
