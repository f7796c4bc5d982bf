#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace refinekit {

// Seed derivation for named random substreams. Every random choice in the
// pipeline descends from one root seed through these mixes, so a run is
// byte-reproducible regardless of evaluation order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt);

// Thin wrapper over mt19937_64. The standard distributions are
// implementation-defined, so sampling is done here from raw engine output to
// keep results identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

    // Uniform real in [lo, hi).
    double uniform_real(double lo, double hi);

    bool coin() { return (next() >> 63) != 0; }
    // True with probability p.
    bool coin(double p) { return uniform_real(0.0, 1.0) < p; }

    template <typename T>
    const T& pick(const std::vector<T>& items) { return items[index(items.size())]; }

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace refinekit
