#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coopsim/episode.hpp"

namespace coopsim {
namespace sim {

// Which of the scenario's sharing participants stay active for a run.
enum class ParticipantFilter { All, EgoOnly, VehiclesOnly, RsusOnly };

inline const char* participant_filter_name(ParticipantFilter f) {
    switch (f) {
        case ParticipantFilter::All: return "both";
        case ParticipantFilter::EgoOnly: return "ego";
        case ParticipantFilter::VehiclesOnly: return "vehicle";
        case ParticipantFilter::RsusOnly: return "rsu";
    }
    return "?";
}

// Experiment-axis knobs applied on top of a scenario before running it.
struct RunOverrides {
    std::optional<comms::LatencyModel> latency;  // every sharing link
    std::optional<double> drop_rate;             // every sharing link
    std::optional<ParticipantFilter> participants;
    std::optional<perception::PerceptionMode> perception;  // every sensing agent
};

inline scenario::ScenarioSpec apply_overrides(scenario::ScenarioSpec spec,
                                              const RunOverrides& o) {
    if (o.latency) {
        spec.default_channel.latency = *o.latency;
        for (auto& [name, c] : spec.channel_overrides) c.latency = *o.latency;
    }
    if (o.drop_rate) {
        spec.default_channel.drop_rate = *o.drop_rate;
        for (auto& [name, c] : spec.channel_overrides) c.drop_rate = *o.drop_rate;
    }
    if (o.participants && *o.participants != ParticipantFilter::All) {
        std::vector<std::string> kept;
        for (const auto& name : spec.ego.participants) {
            Role role = Role::Background;
            for (const auto& a : spec.agents)
                if (a.name == name) role = a.role;
            const bool is_rsu = role == Role::Rsu;
            if (*o.participants == ParticipantFilter::RsusOnly && is_rsu) kept.push_back(name);
            if (*o.participants == ParticipantFilter::VehiclesOnly && !is_rsu)
                kept.push_back(name);
        }
        spec.ego.participants = kept;
    }
    if (o.perception) {
        for (auto& a : spec.agents) {
            a.perception.mode = *o.perception;
            if (*o.perception == perception::PerceptionMode::Oracle) {
                a.perception.p_detect = 1.0;
                a.perception.sigma_pos = 0.0;
                a.perception.sigma_ext = 0.0;
            } else {
                a.perception.p_detect = 0.9;
                a.perception.sigma_pos = 0.3;
                a.perception.sigma_ext = 0.1;
            }
        }
    }
    scenario::validate(spec);
    return spec;
}

struct BatchStats {
    int episodes = 0;
    int collisions = 0;
    int goals = 0;
    int timeouts = 0;
    double success_rate = 0.0;  // percent of collision-free episodes
    int min_distance_n = 0;     // episodes with a finite clearance measurement
    double min_distance_mean = std::numeric_limits<double>::quiet_NaN();
    double min_distance_std = 0.0;  // sample standard deviation (n - 1)
};

inline BatchStats summarize(const std::vector<EpisodeResult>& episodes) {
    BatchStats s;
    s.episodes = static_cast<int>(episodes.size());
    double sum = 0.0;
    std::vector<double> finite;
    for (const auto& e : episodes) {
        if (e.collision) ++s.collisions;
        if (e.outcome == Outcome::Goal) ++s.goals;
        if (e.outcome == Outcome::Timeout) ++s.timeouts;
        if (std::isfinite(e.min_distance)) {
            finite.push_back(e.min_distance);
            sum += e.min_distance;
        }
    }
    if (s.episodes > 0)
        s.success_rate = 100.0 * static_cast<double>(s.episodes - s.collisions) /
                         static_cast<double>(s.episodes);
    s.min_distance_n = static_cast<int>(finite.size());
    if (!finite.empty()) {
        s.min_distance_mean = sum / static_cast<double>(finite.size());
        if (finite.size() > 1) {
            double ss = 0.0;
            for (double v : finite) {
                const double d = v - s.min_distance_mean;
                ss += d * d;
            }
            s.min_distance_std = std::sqrt(ss / static_cast<double>(finite.size() - 1));
        }
    }
    return s;
}

struct BatchResult {
    scenario::ScenarioSpec spec;  // after overrides
    RunOverrides overrides;
    std::uint64_t base_seed = 0;
    std::vector<EpisodeResult> episodes;  // seeds base_seed + i, in order
    BatchStats stats;
};

// Run `count` episodes with consecutive seeds. Episode i always uses seed
// base_seed + i, so any single episode of a batch can be reproduced alone.
inline BatchResult run_batch(const scenario::ScenarioSpec& spec, int count,
                             std::uint64_t base_seed, const RunOverrides& overrides = {}) {
    if (count < 1) throw DomainError("batch needs at least one episode");
    BatchResult result;
    result.spec = apply_overrides(spec, overrides);
    result.overrides = overrides;
    result.base_seed = base_seed;
    result.episodes.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        result.episodes.push_back(
            run_episode(result.spec, base_seed + static_cast<std::uint64_t>(i)));
    result.stats = summarize(result.episodes);
    return result;
}

// Mean detection counts per tick index across episodes still running at that
// tick; used for the detection-count plot.
inline std::vector<double> mean_series(const std::vector<EpisodeResult>& episodes,
                                       bool fused /* else ego-only */) {
    std::size_t longest = 0;
    for (const auto& e : episodes) longest = std::max(longest, e.rows.size());
    std::vector<double> series(longest, 0.0);
    for (std::size_t t = 0; t < longest; ++t) {
        double sum = 0.0;
        int n = 0;
        for (const auto& e : episodes) {
            if (t >= e.rows.size()) continue;
            sum += fused ? e.rows[t].fused_count
                         : (e.rows[t].source_counts.empty() ? 0 : e.rows[t].source_counts[0]);
            ++n;
        }
        series[t] = n > 0 ? sum / n : 0.0;
    }
    return series;
}

}  // namespace sim
}  // namespace coopsim
