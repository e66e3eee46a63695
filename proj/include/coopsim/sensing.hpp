#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "coopsim/errors.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/world.hpp"

namespace coopsim {
namespace sensing {

struct SensorConfig {
    double fov_deg = 80.0;   // full cone, (0, 360]
    double range = 60.0;     // meters, scaled by world weather
    Pose2D mount{};          // offset in the carrier's frame
    HeightClass height = HeightClass::Ground;
};

struct Occluder {
    OrientedBox box{};
    HeightClass height = HeightClass::Ground;
};

// True when nothing solid crosses the open segment between eye and target.
// Elevated eyes see over Ground occluders. Grazing a boundary does not block.
inline bool line_of_sight(Vec2 eye, Vec2 target, const std::vector<Occluder>& occluders,
                          HeightClass eye_height = HeightClass::Ground) {
    for (const Occluder& occ : occluders) {
        if (eye_height == HeightClass::Elevated && occ.height == HeightClass::Ground) continue;
        if (segment_crosses_interior(eye, target, occ.box)) return false;
    }
    return true;
}

// Occluder set for a sightline between two agents: every other agent's
// footprint plus all static obstacles. Agent bodies are Ground class.
inline std::vector<Occluder> occluders_between(const WorldState& world, int observer_id,
                                               int target_id) {
    std::vector<Occluder> occ;
    occ.reserve(world.agents.size() + world.obstacles.size());
    for (const AgentState& a : world.agents) {
        if (a.id == observer_id || a.id == target_id) continue;
        occ.push_back({a.footprint(), HeightClass::Ground});
    }
    for (const StaticObstacle& o : world.obstacles) {
        occ.push_back({o.footprint(), o.height});
    }
    return occ;
}

inline Pose2D sensor_pose(const AgentState& observer, const SensorConfig& sensor) {
    return compose(observer.pose, sensor.mount);
}

// Agent ids visible to the observer: inside effective range (range x weather,
// closed bound), inside the field of view, and with a clear line of sight to
// the target center. Sorted by ascending distance, ties by id.
inline std::vector<int> visible_targets(const AgentState& observer, const SensorConfig& sensor,
                                        const WorldState& world) {
    const Pose2D eye = sensor_pose(observer, sensor);
    const double eff_range = sensor.range * world.weather;
    const double half_fov = sensor.fov_deg * kPi / 360.0;
    std::vector<std::pair<double, int>> hits;
    for (const AgentState& target : world.agents) {
        if (target.id == observer.id) continue;
        const Vec2 to = target.pose.position() - eye.position();
        const double d = norm(to);
        if (d > eff_range) continue;
        if (d > 0.0) {
            const double bearing = angle_diff(std::atan2(to.y, to.x), eye.yaw);
            if (std::abs(bearing) > half_fov) continue;
        }
        const auto occ = occluders_between(world, observer.id, target.id);
        if (!line_of_sight(eye.position(), target.pose.position(), occ, sensor.height)) continue;
        hits.emplace_back(d, target.id);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<int> ids;
    ids.reserve(hits.size());
    for (const auto& [d, id] : hits) ids.push_back(id);
    return ids;
}

// --- constant-velocity Kalman filter over [x, y, vx, vy] ---

using Mat4 = std::array<std::array<double, 4>, 4>;
using Vec4 = std::array<double, 4>;

namespace detail {

inline Mat4 mat_mul(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j) r[i][j] += a[i][k] * b[k][j];
    return r;
}

inline Mat4 mat_transpose(const Mat4& a) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i][j] = a[j][i];
    return r;
}

inline Mat4 mat_add(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i][j] = a[i][j] + b[i][j];
    return r;
}

inline Mat4 identity4() {
    Mat4 r{};
    for (int i = 0; i < 4; ++i) r[i][i] = 1.0;
    return r;
}

}  // namespace detail

struct KalmanConfig {
    double process_noise = 0.1;  // continuous white accel intensity q
    double sigma_gps = 0.5;      // position measurement std dev, meters
};

struct LocalizationEstimate {
    Vec4 state{};  // x, y, vx, vy
    Mat4 cov{};

    Vec2 position() const { return {state[0], state[1]}; }
    Vec2 velocity() const { return {state[2], state[3]}; }
};

inline LocalizationEstimate make_estimate(Vec2 pos, Vec2 vel, double pos_var = 1.0,
                                          double vel_var = 1.0) {
    LocalizationEstimate e;
    e.state = {pos.x, pos.y, vel.x, vel.y};
    e.cov = Mat4{};
    e.cov[0][0] = e.cov[1][1] = pos_var;
    e.cov[2][2] = e.cov[3][3] = vel_var;
    return e;
}

// Predict + position update. Covariance update uses the Joseph form and is
// re-symmetrized, keeping it PSD through long update sequences.
inline LocalizationEstimate kalman_update(const LocalizationEstimate& prior, Vec2 measurement,
                                          double dt, const KalmanConfig& cfg = {}) {
    if (dt <= 0.0) throw DomainError("dt must be > 0");

    Mat4 F = detail::identity4();
    F[0][2] = dt;
    F[1][3] = dt;

    // Discretized constant-velocity process noise per axis.
    const double q = cfg.process_noise;
    const double q11 = q * dt * dt * dt / 3.0;
    const double q12 = q * dt * dt / 2.0;
    const double q22 = q * dt;
    Mat4 Q{};
    Q[0][0] = q11;
    Q[0][2] = q12;
    Q[2][0] = q12;
    Q[2][2] = q22;
    Q[1][1] = q11;
    Q[1][3] = q12;
    Q[3][1] = q12;
    Q[3][3] = q22;

    // Predict.
    Vec4 xp{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) xp[i] += F[i][j] * prior.state[j];
    Mat4 Pp = detail::mat_add(detail::mat_mul(detail::mat_mul(F, prior.cov), detail::mat_transpose(F)), Q);

    // Innovation covariance S = HPH' + R with H selecting position.
    const double r = cfg.sigma_gps * cfg.sigma_gps;
    const double s00 = Pp[0][0] + r;
    const double s01 = Pp[0][1];
    const double s10 = Pp[1][0];
    const double s11 = Pp[1][1] + r;
    const double det = s00 * s11 - s01 * s10;
    if (!(std::abs(det) > 1e-30))
        throw SingularInnovation("innovation covariance is not invertible");
    const double i00 = s11 / det, i01 = -s01 / det, i10 = -s10 / det, i11 = s00 / det;

    // Gain K = P H' S^-1 (4x2).
    double K[4][2];
    for (int i = 0; i < 4; ++i) {
        K[i][0] = Pp[i][0] * i00 + Pp[i][1] * i10;
        K[i][1] = Pp[i][0] * i01 + Pp[i][1] * i11;
    }

    const double inn0 = measurement.x - xp[0];
    const double inn1 = measurement.y - xp[1];

    LocalizationEstimate post;
    for (int i = 0; i < 4; ++i) post.state[i] = xp[i] + K[i][0] * inn0 + K[i][1] * inn1;

    // Joseph form: (I - KH) P (I - KH)' + K R K'.
    Mat4 IKH = detail::identity4();
    for (int i = 0; i < 4; ++i) {
        IKH[i][0] -= K[i][0];
        IKH[i][1] -= K[i][1];
    }
    Mat4 P = detail::mat_mul(detail::mat_mul(IKH, Pp), detail::mat_transpose(IKH));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) P[i][j] += r * (K[i][0] * K[j][0] + K[i][1] * K[j][1]);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double s = 0.5 * (P[i][j] + P[j][i]);
            P[i][j] = s;
            P[j][i] = s;
        }
    post.cov = P;
    return post;
}

}  // namespace sensing
}  // namespace coopsim
