#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace brt {

// All experiment randomness flows from one master seed through named
// substreams, so each stage replays independently of the others.
// Distribution sampling is implemented here rather than with
// std::*_distribution, whose output is implementation-defined; this keeps
// the determinism contract portable across standard libraries.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : engine_(seed) {}

    RngStream(uint64_t master_seed, const std::string& stream_name)
        : engine_(mix(master_seed, fnv1a(stream_name))) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) {
        // rejection sampling keeps the draw exactly uniform
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    // Standard normal via Box-Muller (no cached spare: keeps the stream
    // state a pure function of the draw count).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    uint64_t raw() { return engine_(); }

    // Derive a child stream; used to hand independent streams to actors.
    RngStream substream(const std::string& name) {
        return RngStream(mix(engine_(), fnv1a(name)));
    }

    static uint64_t fnv1a(const std::string& s) {
        uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    static uint64_t mix(uint64_t a, uint64_t b) {
        // splitmix64 finalizer over the combined word
        uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace brt
