#pragma once

#include <algorithm>
#include <cstdint>
#include <variant>
#include <vector>

#include "coopsim/errors.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/rng.hpp"

namespace coopsim {
namespace comms {

struct NoLatency {
    bool operator==(const NoLatency&) const = default;
};
struct DeterministicLatency {
    double delay = 0.0;  // seconds
    bool operator==(const DeterministicLatency&) const = default;
};
struct UniformLatency {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const UniformLatency&) const = default;
};

using LatencyModel = std::variant<NoLatency, DeterministicLatency, UniformLatency>;

struct ChannelConfig {
    LatencyModel latency = NoLatency{};
    double drop_rate = 0.0;  // Bernoulli, decided at send time
};

struct InFlightFrame {
    perception::DetectionFrame frame;
    double send_time = 0.0;
    double deliver_time = 0.0;
    std::uint64_t seq = 0;  // send order
    bool dropped = false;
};

struct ChannelStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
};

// Due-time comparisons get this much slack so a deliver time assembled as
// send_time + delay still matches a poll clock accumulated as tick * dt.
// Far below any tick length, far above double rounding at realistic times.
inline constexpr double kTimeSlack = 1e-9;

// One directional link. Latency is sampled and the drop decision is made at
// send time; poll returns due frames ordered by (deliver_time, send order),
// so stochastic latency may reorder but replays never do.
class Channel {
public:
    Channel() = default;
    Channel(const ChannelConfig& cfg, RngStream rng) : cfg_(cfg), rng_(std::move(rng)) {}

    // Latency model is settable between sends; tests use this to pin
    // per-message delays.
    ChannelConfig& config() { return cfg_; }
    const ChannelConfig& config() const { return cfg_; }

    void send(const perception::DetectionFrame& frame, double now) {
        InFlightFrame f;
        f.frame = frame;
        f.send_time = now;
        f.seq = next_seq_++;
        f.deliver_time = now + sample_latency();
        f.dropped = rng_.uniform01() < cfg_.drop_rate;
        ++stats_.sent;
        if (f.dropped) {
            ++stats_.dropped;
            return;  // consumed RNG, never queued
        }
        queue_.push_back(std::move(f));
    }

    std::vector<perception::DetectionFrame> poll(double now) {
        if (now < last_poll_) throw ClockRegression("channel polled with an earlier timestamp");
        last_poll_ = now;
        std::vector<std::size_t> due;  // ascending indices
        for (std::size_t i = 0; i < queue_.size(); ++i) {
            if (queue_[i].deliver_time <= now + kTimeSlack) due.push_back(i);
        }
        std::vector<std::size_t> order = due;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (queue_[a].deliver_time != queue_[b].deliver_time)
                return queue_[a].deliver_time < queue_[b].deliver_time;
            return queue_[a].seq < queue_[b].seq;
        });
        std::vector<perception::DetectionFrame> out;
        out.reserve(order.size());
        for (std::size_t i : order) out.push_back(std::move(queue_[i].frame));
        stats_.delivered += order.size();
        // Erase delivered entries, preserving order of the rest.
        std::vector<InFlightFrame> rest;
        rest.reserve(queue_.size() - due.size());
        for (std::size_t i = 0; i < queue_.size(); ++i) {
            if (!std::binary_search(due.begin(), due.end(), i)) rest.push_back(std::move(queue_[i]));
        }
        queue_ = std::move(rest);
        return out;
    }

    ChannelStats stats() const {
        ChannelStats s = stats_;
        s.in_flight = queue_.size();
        return s;
    }

private:
    double sample_latency() {
        if (std::holds_alternative<NoLatency>(cfg_.latency)) return 0.0;
        if (const auto* d = std::get_if<DeterministicLatency>(&cfg_.latency)) return d->delay;
        const auto& u = std::get<UniformLatency>(cfg_.latency);
        return rng_.uniform(u.lo, u.hi);
    }

    ChannelConfig cfg_{};
    RngStream rng_{};
    std::vector<InFlightFrame> queue_;
    std::uint64_t next_seq_ = 0;
    double last_poll_ = -std::numeric_limits<double>::infinity();
    ChannelStats stats_{};
};

}  // namespace comms
}  // namespace coopsim
