#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace coopsim {

// splitmix64 step; used to mix seed words into engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Substream purposes. Each (episode seed, purpose, id) triple owns an
// independent stream so adding draws in one module never shifts another.
enum class StreamPurpose : std::uint64_t {
    Perception = 1,
    Channel = 2,
    Spawn = 3,
    Test = 99,
};

inline std::uint64_t derive_seed(std::uint64_t episode_seed, StreamPurpose purpose,
                                 std::uint64_t id) {
    std::uint64_t s = mix64(episode_seed);
    s = mix64(s ^ static_cast<std::uint64_t>(purpose));
    s = mix64(s ^ id);
    return s;
}

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// the distribution transforms below are pinned by this file. Together that
// makes reruns byte-identical across toolchains.
class RngStream {
public:
    RngStream() : engine_(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    RngStream(std::uint64_t episode_seed, StreamPurpose purpose, std::uint64_t id)
        : engine_(derive_seed(episode_seed, purpose, id)) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        ++draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform integer in [0, n). n must be > 0; modulo bias is irrelevant at
    // the scales used here and keeps the draw count at exactly one.
    std::uint64_t uniform_index(std::uint64_t n) {
        ++draws_;
        return engine_() % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller, always two draws, no cached spare: consumption per call is
    // constant, which keeps substream alignment independent of call history.
    double normal(double mu = 0.0, double sigma = 1.0) {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Number of raw engine draws so far. Tests use this to prove a code path
    // consumes no randomness.
    std::uint64_t draw_count() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

}  // namespace coopsim
