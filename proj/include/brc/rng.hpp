#pragma once

// Seed plumbing. Every random draw in the workbench comes from a generator
// seeded by a named substream of the root seed, so a job's randomness does
// not depend on which worker ran it or in what order.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace brc {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derive a child seed from a parent, a tag and any number of indices.
std::uint64_t substream(std::uint64_t parent, std::string_view tag,
                        std::initializer_list<std::uint64_t> indices = {}) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(engine_);
    }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace brc
