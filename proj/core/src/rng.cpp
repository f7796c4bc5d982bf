#include "refinekit/rng.hpp"

#include <limits>

namespace refinekit {
namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt)
{
    return splitmix64(splitmix64(seed) ^ (salt * 0xD6E8FEB86659FD93ULL + 0x632BE59BD9B4E019ULL));
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt)
{
    // FNV-1a over the name, then mixed with the parent seed.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : salt) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return mix_seed(seed, h);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi <= lo)
        return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) // full 64-bit range
        return static_cast<std::int64_t>(next());
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t v = next();
    while (v >= limit)
        v = next();
    return lo + static_cast<std::int64_t>(v % span);
}

double Rng::uniform_real(double lo, double hi)
{
    // 53 random mantissa bits.
    const double unit = static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    return lo + (hi - lo) * unit;
}

} // namespace refinekit
