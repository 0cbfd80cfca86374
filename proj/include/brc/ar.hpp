#pragma once

// Artificial reservoir baseline: a sparse tanh echo state network whose
// inputs are the same bipolar patterns delivered to the culture, with
// Poisson input noise calibrated on spontaneous spike counts.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "brc/grid.hpp"
#include "brc/rng.hpp"
#include "brc/spectral.hpp"

namespace brc {

struct EsnConfig {
    int n_units = kNumChannels;
    double sparsity = 0.10;     // fraction of nonzero recurrent weights
    double rho = 0.9;           // target spectral radius
    double input_gain = 1.0;
    double leak = 1.0;          // 1 = plain rate units
    int steps = 3;              // recurrent updates from rest
    double noise_scale = 1.0;   // multiplier on sampled noise counts
    std::uint64_t seed = 1;

    std::vector<std::string> validate() const;
    bool operator==(const EsnConfig&) const = default;
};

struct EsnReservoir {
    EsnConfig cfg;
    SparseMatrix W;
    double unscaled_radius = 0.0;

    double nonzero_fraction() const;
};

/// Draws a Bernoulli(sparsity) mask with N(0,1) weights and rescales it to
/// the target spectral radius. Throws NumericError if the unscaled radius is
/// numerically zero.
EsnReservoir init_esn(const EsnConfig& cfg);

struct NoiseModel {
    std::vector<double> mean;   // per-channel spike count per window
    int n_windows = 0;
    std::string family = "poisson";

    /// One non-negative count per channel.
    std::vector<double> sample(Rng& rng) const;
};

/// Per-channel mean counts over at least 21 windows (ProtocolError otherwise).
NoiseModel estimate_noise(std::span<const std::vector<std::int32_t>> windows);

/// Input u (+1 positive poles, -1 negative poles, plus scaled noise counts),
/// then x <- (1 - leak) x + leak * tanh(gain u + W x) for `steps` updates from
/// x = 0. Requires n_units = 4096.
std::vector<double> ar_state(const EsnReservoir& esn, const StimPattern& p, const NoiseModel& noise,
                             std::uint64_t seed);

/// Binary sparse-matrix file: "BRCE", u32 version, u32 n, u64 nnz, nnz x
/// {u32 row, u32 col, f64 value} little-endian, then u32 length + JSON
/// config echo.
void save_esn(const EsnReservoir& esn, const std::filesystem::path& path);
EsnReservoir load_esn(const std::filesystem::path& path);

}  // namespace brc
