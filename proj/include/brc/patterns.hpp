#pragma once

// Stimulus families: pointwise pairs, oriented bars, seven-segment clock
// digits and probabilistically mapped MNIST digits.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "brc/grid.hpp"

namespace brc {

StimPattern make_pointwise(ElectrodeCoord center, const Waveform& wf, std::string label);

/// `orientation_deg` must be one of 0, 45, 90, 135. Positive poles sit at
/// center + k*(1+dilation)*dir for k in [-(n-1)/2, n/2]; every negative pole
/// is the right-hand neighbour of its positive pole, so all orientations
/// share the center pair.
StimPattern make_bar(int orientation_deg, ElectrodeCoord center, const Waveform& wf,
                     int n_pairs = 5, int dilation = 1, std::string label = {});

enum class Segment : int { a = 0, b, c, d, e, f, g };

/// Seven-segment layout. Horizontal segments (a, g, d) are rows of
/// consecutive +/- pairs; vertical segments stack horizontal pairs in a
/// column. Footprint is (2L+3) rows by (2L+4) columns for L = segment_length.
struct ClockGeometry {
    ElectrodeCoord origin{28, 27};
    int segment_length = 3;

    std::array<std::vector<BipolarPair>, 7> segments() const;
    std::vector<std::string> validate() const;
};

/// Segments lit for a digit in the standard seven-segment encoding.
std::vector<Segment> digit_segments(int digit);

StimPattern make_clock_digit(int digit, const ClockGeometry& geom, const Waveform& wf);

struct MnistImage {
    std::array<std::uint8_t, 28 * 28> pixels{};
    int label = 0;
};

/// Reads an IDX3 image file and IDX1 label file. Throws FormatError with the
/// byte offset of the first problem.
std::vector<MnistImage> load_mnist_idx(const std::filesystem::path& images_path,
                                       const std::filesystem::path& labels_path);

/// Seeded sample of `n` distinct images (without replacement).
std::vector<MnistImage> sample_subset(const std::vector<MnistImage>& all, std::size_t n,
                                      std::uint64_t seed);

/// Nearest-neighbour downsample of a 28x28 image to res x res (center-aligned
/// source sampling; values are copied, never interpolated).
std::vector<std::uint8_t> downsample_nearest(const MnistImage& img, int res);

/// Probability of stimulating a pixel of grey value v; default (255-v)/255.
using StimProbability = std::function<double(std::uint8_t)>;
double linear_dark_probability(std::uint8_t v);

struct MnistMapping {
    int target_res = 16;
    ElectrodeCoord region_origin{24, 16};
    StimProbability probability = linear_dark_probability;
};

/// Bernoulli-maps a digit onto pairs: pixel (r, c) becomes positive pole
/// (origin.row + r, origin.col + 2c) with its right neighbour negative. May
/// return an empty pattern (e.g. an all-white image).
StimPattern map_mnist(const MnistImage& img, const MnistMapping& mapping, const Waveform& wf,
                      std::uint64_t seed);

}  // namespace brc
