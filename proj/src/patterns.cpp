#include "brc/patterns.hpp"

#include <algorithm>
#include <numeric>

#include "brc/errors.hpp"
#include "brc/rng.hpp"

namespace brc {

namespace {

ElectrodeCoord right_of(ElectrodeCoord c) { return {c.row, c.col + 1}; }

void require_in_bounds(ElectrodeCoord c, const char* what) {
    if (!in_bounds(c)) {
        throw BoundsError(std::string(what) + ": electrode (" + std::to_string(c.row) + "," +
                          std::to_string(c.col) + ") leaves the grid");
    }
}

}  // namespace

StimPattern make_pointwise(ElectrodeCoord center, const Waveform& wf, std::string label) {
    require_in_bounds(center, "pointwise");
    require_in_bounds(right_of(center), "pointwise");
    return StimPattern{std::move(label), {{center, right_of(center)}}, wf};
}

StimPattern make_bar(int orientation_deg, ElectrodeCoord center, const Waveform& wf, int n_pairs,
                     int dilation, std::string label) {
    ElectrodeCoord dir;
    switch (orientation_deg) {
        case 0: dir = {0, 1}; break;
        case 45: dir = {-1, 1}; break;
        case 90: dir = {-1, 0}; break;
        case 135: dir = {-1, -1}; break;
        default: throw ConfigError("bar orientation must be 0, 45, 90 or 135 degrees");
    }
    if (n_pairs < 1) throw ConfigError("bar needs at least one pair");
    if (dilation < 1) throw ConfigError("bar dilation must be >= 1 (pairs would share electrodes)");

    if (label.empty()) label = "bar" + std::to_string(orientation_deg);
    StimPattern p{std::move(label), {}, wf};
    const int step = 1 + dilation;
    const int k0 = -(n_pairs - 1) / 2;
    for (int k = k0; k < k0 + n_pairs; ++k) {
        ElectrodeCoord pos{center.row + k * step * dir.row, center.col + k * step * dir.col};
        require_in_bounds(pos, "bar");
        require_in_bounds(right_of(pos), "bar");
        p.pairs.push_back({pos, right_of(pos)});
    }
    return p;
}

std::array<std::vector<BipolarPair>, 7> ClockGeometry::segments() const {
    const int L = segment_length;
    const int r0 = origin.row;
    const int c0 = origin.col;
    std::array<std::vector<BipolarPair>, 7> seg;

    auto horizontal = [&](int row) {
        std::vector<BipolarPair> out;
        for (int k = 0; k < L; ++k) {
            ElectrodeCoord pos{row, c0 + 2 + 2 * k};
            out.push_back({pos, right_of(pos)});
        }
        return out;
    };
    auto vertical = [&](int first_row, int col) {
        std::vector<BipolarPair> out;
        for (int k = 0; k < L; ++k) {
            ElectrodeCoord pos{first_row + k, col};
            out.push_back({pos, right_of(pos)});
        }
        return out;
    };

    const int left = c0;
    const int right = c0 + 2 + 2 * L;
    seg[static_cast<int>(Segment::a)] = horizontal(r0);
    seg[static_cast<int>(Segment::f)] = vertical(r0 + 1, left);
    seg[static_cast<int>(Segment::b)] = vertical(r0 + 1, right);
    seg[static_cast<int>(Segment::g)] = horizontal(r0 + L + 1);
    seg[static_cast<int>(Segment::e)] = vertical(r0 + L + 2, left);
    seg[static_cast<int>(Segment::c)] = vertical(r0 + L + 2, right);
    seg[static_cast<int>(Segment::d)] = horizontal(r0 + 2 * L + 2);
    return seg;
}

std::vector<std::string> ClockGeometry::validate() const {
    std::vector<std::string> out;
    if (segment_length < 1) {
        out.push_back("segment_length must be >= 1");
        return out;
    }
    StimPattern all{"8", {}, Waveform{}};
    for (const auto& s : segments()) all.pairs.insert(all.pairs.end(), s.begin(), s.end());
    for (auto& v : validate_pattern(all)) out.push_back("clock geometry: " + v);
    return out;
}

std::vector<Segment> digit_segments(int digit) {
    using S = Segment;
    switch (digit) {
        case 0: return {S::a, S::b, S::c, S::d, S::e, S::f};
        case 1: return {S::b, S::c};
        case 2: return {S::a, S::b, S::g, S::e, S::d};
        case 3: return {S::a, S::b, S::g, S::c, S::d};
        case 4: return {S::f, S::g, S::b, S::c};
        case 5: return {S::a, S::f, S::g, S::c, S::d};
        case 6: return {S::a, S::f, S::g, S::e, S::d, S::c};
        case 7: return {S::a, S::b, S::c};
        case 8: return {S::a, S::b, S::c, S::d, S::e, S::f, S::g};
        case 9: return {S::a, S::b, S::c, S::d, S::f, S::g};
        default: throw ConfigError("clock digit must be in 0..9");
    }
}

StimPattern make_clock_digit(int digit, const ClockGeometry& geom, const Waveform& wf) {
    if (auto v = geom.validate(); !v.empty()) throw ConfigError(v.front());
    const auto seg = geom.segments();
    StimPattern p{std::to_string(digit), {}, wf};
    for (Segment s : digit_segments(digit)) {
        const auto& pairs = seg[static_cast<int>(s)];
        p.pairs.insert(p.pairs.end(), pairs.begin(), pairs.end());
    }
    return p;
}

std::vector<MnistImage> sample_subset(const std::vector<MnistImage>& all, std::size_t n,
                                      std::uint64_t seed) {
    if (n > all.size()) throw ConfigError("MNIST subset larger than the dataset");
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots become the sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<MnistImage> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(all[idx[i]]);
    return out;
}

std::vector<std::uint8_t> downsample_nearest(const MnistImage& img, int res) {
    if (res < 1) throw ConfigError("target resolution must be >= 1");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(res) * res);
    auto src = [res](int i) { return std::min(27, static_cast<int>((i + 0.5) * 28.0 / res)); };
    for (int r = 0; r < res; ++r) {
        for (int c = 0; c < res; ++c) out[r * res + c] = img.pixels[src(r) * 28 + src(c)];
    }
    return out;
}

double linear_dark_probability(std::uint8_t v) { return (255.0 - v) / 255.0; }

StimPattern map_mnist(const MnistImage& img, const MnistMapping& mapping, const Waveform& wf,
                      std::uint64_t seed) {
    const int res = mapping.target_res;
    const ElectrodeCoord o = mapping.region_origin;
    if (res < 1 || !in_bounds(o) || !in_bounds({o.row + res - 1, o.col + 2 * res - 1})) {
        throw BoundsError("MNIST footprint " + std::to_string(res) + "x" + std::to_string(2 * res) +
                          " does not fit the grid from the region origin");
    }
    const auto small = downsample_nearest(img, res);
    Rng rng(seed);
    StimPattern p{std::to_string(img.label), {}, wf};
    for (int r = 0; r < res; ++r) {
        for (int c = 0; c < res; ++c) {
            if (rng.bernoulli(mapping.probability(small[r * res + c]))) {
                ElectrodeCoord pos{o.row + r, o.col + 2 * c};
                p.pairs.push_back({pos, right_of(pos)});
            }
        }
    }
    return p;
}

}  // namespace brc
