#pragma once

// Electrode-array geometry shared by every other module: a fixed 64x64
// high-density array, row-major channel numbering, bipolar stimulation pairs
// and the rectangular pulse description.

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace brc {

inline constexpr int kGridSide = 64;
inline constexpr int kNumChannels = kGridSide * kGridSide;
inline constexpr int kSampleRateHz = 20000;

struct ElectrodeCoord {
    int row = 0;
    int col = 0;

    auto operator<=>(const ElectrodeCoord&) const = default;
};

bool in_bounds(ElectrodeCoord c) noexcept;

/// Row-major channel number, row*64 + col. Throws BoundsError off-grid.
int channel_index(ElectrodeCoord c);
/// Inverse of channel_index. Throws BoundsError outside [0, 4095].
ElectrodeCoord coord_of(int channel);

int chebyshev_distance(ElectrodeCoord a, ElectrodeCoord b) noexcept;

struct BipolarPair {
    ElectrodeCoord positive;
    ElectrodeCoord negative;

    auto operator<=>(const BipolarPair&) const = default;
};

enum class WaveShape { monophasic, biphasic };

std::string to_string(WaveShape s);
WaveShape wave_shape_from_string(const std::string& s);

struct Waveform {
    WaveShape shape = WaveShape::monophasic;
    double amplitude_uA = 10.0;    // per pair
    double delta_plus_us = 20.0;
    double delta_minus_us = 0.0;   // 0 iff monophasic

    static Waveform monophasic(double amplitude_uA, double width_us);
    static Waveform biphasic(double amplitude_uA, double plus_us, double minus_us);

    bool operator==(const Waveform&) const = default;
};

struct StimPattern {
    std::string label;
    std::vector<BipolarPair> pairs;
    Waveform waveform;
    // Diagonal/adjacent pairing is the default contract; generators that need
    // wider pole spacing set this explicitly.
    bool allow_non_adjacent = false;

    bool operator==(const StimPattern&) const = default;
};

/// Every invariant violation found in `p`; an empty list means the pattern is
/// valid. Messages are stable strings ("empty pattern", "electrode reuse", ...)
/// followed by detail.
std::vector<std::string> validate_pattern(const StimPattern& p);

/// Same checks, but amplitude 0 is tolerated (null-stimulus controls).
std::vector<std::string> validate_pattern_structure(const StimPattern& p);

/// All distinct electrodes of a pattern (both poles), in pair order.
std::vector<ElectrodeCoord> pattern_electrodes(const StimPattern& p);

}  // namespace brc
