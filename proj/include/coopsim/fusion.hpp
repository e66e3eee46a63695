#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coopsim/geometry.hpp"
#include "coopsim/perception.hpp"

namespace coopsim {
namespace fusion {

struct FusionConfig {
    double iou_threshold = 0.3;
    double stale_horizon = 1.0;  // seconds; older frames are discarded
    bool operator==(const FusionConfig&) const = default;
};

// Late fusion of detection frames into one deduplicated box list.
//
// Frames strictly older than now - stale_horizon are dropped; anything newer
// is fused as-is, outdated positions included, which is exactly how latency
// degrades the result. Detections pool in (source id, list order) and cluster
// greedily: the first unclaimed detection seeds a cluster and absorbs every
// unclaimed detection whose IoU against the seed reaches the threshold.
// Cluster output is the arithmetic mean of centers and extents and the
// circular mean of yaws, computed relative to the seed so that k identical
// boxes fuse to that box bit-for-bit.
inline std::vector<perception::BoundingBox2D> fuse(
    const std::vector<perception::DetectionFrame>& frames, const FusionConfig& cfg, double now) {
    std::vector<const perception::DetectionFrame*> live;
    live.reserve(frames.size());
    for (const auto& f : frames) {
        if (f.stamp < now - cfg.stale_horizon) continue;
        live.push_back(&f);
    }
    std::stable_sort(live.begin(), live.end(),
                     [](const auto* a, const auto* b) { return a->source_id < b->source_id; });

    std::vector<const perception::BoundingBox2D*> pool;
    for (const auto* f : live) {
        for (const auto& det : f->detections) pool.push_back(&det.box);
    }

    std::vector<perception::BoundingBox2D> fused;
    std::vector<bool> claimed(pool.size(), false);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (claimed[i]) continue;
        const perception::BoundingBox2D& seed = *pool[i];
        std::vector<const perception::BoundingBox2D*> cluster{&seed};
        claimed[i] = true;
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            if (claimed[j]) continue;
            if (oriented_iou(seed, *pool[j]) >= cfg.iou_threshold) {
                claimed[j] = true;
                cluster.push_back(pool[j]);
            }
        }
        // Mean as seed + mean offset: exact when all members equal the seed.
        Vec2 dc{}, dh{};
        double ssin = 0.0, scos = 0.0;
        for (const auto* b : cluster) {
            dc = dc + (b->center - seed.center);
            dh = dh + (b->half - seed.half);
            const double rel = angle_diff(b->yaw, seed.yaw);
            ssin += std::sin(rel);
            scos += std::cos(rel);
        }
        const double n = static_cast<double>(cluster.size());
        perception::BoundingBox2D out;
        out.center = seed.center + dc * (1.0 / n);
        out.half = seed.half + dh * (1.0 / n);
        const double mean_rel = (ssin == 0.0 && scos > 0.0) ? 0.0 : std::atan2(ssin, scos);
        out.yaw = normalize_angle(seed.yaw + mean_rel);
        fused.push_back(out);
    }
    return fused;
}

}  // namespace fusion
}  // namespace coopsim
