#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coopsim/batch.hpp"

namespace coopsim {
namespace sim {

namespace detail {

// Shortest-ish deterministic float formatting; identical doubles always
// produce identical text, so reruns are byte-for-byte reproducible.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << body;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::string episode_csv(const EpisodeResult& e) {
    std::string s = "tick,time,x,y,yaw,speed,behavior,fused";
    for (const auto& src : e.sources) s += ",det_" + src;
    s += ",delivered,dropped,gap\n";
    for (const auto& r : e.rows) {
        s += std::to_string(r.tick);
        s += ',' + detail::fmt(r.time);
        s += ',' + detail::fmt(r.ego_pose.x);
        s += ',' + detail::fmt(r.ego_pose.y);
        s += ',' + detail::fmt(r.ego_pose.yaw);
        s += ',' + detail::fmt(r.ego_speed);
        s += ',';
        s += planning::behavior_name(r.behavior);
        s += ',' + std::to_string(r.fused_count);
        for (std::size_t i = 0; i < e.sources.size(); ++i)
            s += ',' + std::to_string(i < r.source_counts.size() ? r.source_counts[i] : 0);
        s += ',' + std::to_string(r.delivered);
        s += ',' + std::to_string(r.dropped);
        s += ',' + detail::fmt(r.gap);
        s += '\n';
    }
    return s;
}

inline nlohmann::json summary_json(const BatchResult& batch) {
    using nlohmann::json;
    json config;
    config["scenario"] = batch.spec.name;
    config["seed"] = batch.base_seed;
    config["episodes"] = static_cast<int>(batch.episodes.size());
    config["latency"] = scenario::detail::dump_latency(batch.spec.default_channel.latency);
    config["drop_rate"] = batch.spec.default_channel.drop_rate;
    config["participants"] = participant_filter_name(
        batch.overrides.participants.value_or(ParticipantFilter::All));
    bool noisy = false;
    for (const auto& a : batch.spec.agents)
        if (a.perception.mode == perception::PerceptionMode::Noisy) noisy = true;
    config["perception"] = noisy ? "noisy" : "oracle";

    json episodes = json::array();
    for (const auto& e : batch.episodes) {
        json je;
        je["seed"] = e.seed;
        je["outcome"] = outcome_name(e.outcome);
        je["collision"] = e.collision;
        je["ticks"] = e.ticks;
        je["duration"] = e.duration;
        if (std::isfinite(e.min_distance))
            je["min_distance"] = e.min_distance;
        else
            je["min_distance"] = nullptr;
        je["frames_sent"] = e.channel.sent;
        je["frames_delivered"] = e.channel.delivered;
        je["frames_dropped"] = e.channel.dropped;
        episodes.push_back(je);
    }

    json results;
    results["success_rate"] = batch.stats.success_rate;
    results["collisions"] = batch.stats.collisions;
    results["goals"] = batch.stats.goals;
    results["timeouts"] = batch.stats.timeouts;
    json md;
    md["n"] = batch.stats.min_distance_n;
    if (batch.stats.min_distance_n > 0) {
        md["mean"] = batch.stats.min_distance_mean;
        md["std_sample"] = batch.stats.min_distance_std;
    } else {
        md["mean"] = nullptr;
        md["std_sample"] = nullptr;
    }
    results["min_distance"] = md;

    json root;
    root["schema_version"] = 1;
    root["config"] = config;
    root["results"] = results;
    root["episodes"] = episodes;
    root["detections"] = json{{"fused_mean", mean_series(batch.episodes, true)},
                              {"ego_mean", mean_series(batch.episodes, false)}};
    return root;
}

struct SvgSeries {
    std::string label;
    std::vector<double> values;
};

// Minimal standalone line chart: one polyline per series, one point per tick.
inline std::string detections_svg(const std::vector<SvgSeries>& series) {
    using detail::fmt;
    const double width = 800.0, height = 300.0;
    const double left = 50.0, right = 15.0, top = 25.0, bottom = 35.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

    std::size_t longest = 1;
    double peak = 1.0;
    for (const auto& s : series) {
        longest = std::max(longest, s.values.size());
        for (double v : s.values) peak = std::max(peak, v);
    }

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
           fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<g fill=\"none\" stroke=\"#444\" stroke-width=\"1\">\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) +
           "\" y2=\"" + fmt(height - bottom) + "\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(height - bottom) + "\" x2=\"" +
           fmt(width - right) + "\" y2=\"" + fmt(height - bottom) + "\"/>\n";
    svg += "</g>\n";
    svg += "<text x=\"" + fmt(left - 8.0) + "\" y=\"" + fmt(top + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + fmt(peak) +
           "</text>\n";
    svg += "<text x=\"" + fmt(left - 8.0) + "\" y=\"" + fmt(height - bottom) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">0</text>\n";
    svg += "<text x=\"" + fmt(width - right) + "\" y=\"" + fmt(height - bottom + 16.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">tick " +
           std::to_string(longest - 1) + "</text>\n";
    svg += "<text x=\"" + fmt(left) + "\" y=\"" + fmt(height - bottom + 16.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">detections per tick</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % (sizeof palette / sizeof palette[0])];
        if (!s.values.empty()) {
            std::string pts;
            for (std::size_t i = 0; i < s.values.size(); ++i) {
                const double x =
                    s.values.size() == 1
                        ? left
                        : left + plot_w * static_cast<double>(i) /
                                     static_cast<double>(s.values.size() - 1);
                const double y = height - bottom - plot_h * (s.values[i] / peak);
                if (!pts.empty()) pts += ' ';
                pts += fmt(x) + "," + fmt(y);
            }
            svg += "<polyline fill=\"none\" stroke=\"";
            svg += color;
            svg += "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        }
        const double ly = top + 14.0 * static_cast<double>(k);
        svg += "<rect x=\"" + fmt(left + 10.0) + "\" y=\"" + fmt(ly) +
               "\" width=\"10\" height=\"4\" fill=\"";
        svg += color;
        svg += "\"/>\n";
        svg += "<text x=\"" + fmt(left + 26.0) + "\" y=\"" + fmt(ly + 5.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// Write episode_<i>.csv per episode plus summary.json and detections.svg.
// Output is a pure function of the batch: no timestamps, no machine state.
inline void emit_outputs(const std::filesystem::path& dir, const BatchResult& batch) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    for (std::size_t i = 0; i < batch.episodes.size(); ++i)
        detail::write_file(dir / ("episode_" + std::to_string(i) + ".csv"),
                           episode_csv(batch.episodes[i]));
    detail::write_file(dir / "summary.json", summary_json(batch).dump(2) + "\n");
    detail::write_file(dir / "detections.svg",
                       detections_svg({{"fused", mean_series(batch.episodes, true)},
                                       {"ego only", mean_series(batch.episodes, false)}}));
}

}  // namespace sim
}  // namespace coopsim
