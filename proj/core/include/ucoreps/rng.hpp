#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ucoreps {

/**
 * Seedable generator with portable, bit-reproducible output.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. The distributions are implemented here rather than taken from
 * <random>, because the standard library distributions differ between
 * implementations. Sub-streams are derived with SplitMix64 so that any
 * (seed, stream, index) triple addresses an independent generator.
 */
class Rng {
public:
    /// Identifier recorded in run manifests.
    static constexpr std::string_view algorithm_id = "mt19937_64+splitmix64/v1";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Generator for sub-stream `stream`, element `index` of `seed`.
    static Rng derived(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

    /// SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t x) noexcept;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on (0, 1).
    double uniform_open();

    double normal();

    /// Gamma(shape, 1) via Marsaglia-Tsang.
    double gamma(double shape);

    /// Index drawn from a discrete distribution (weights need not be normalized).
    int categorical(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
};

} // namespace ucoreps
