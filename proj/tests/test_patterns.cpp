#include <doctest.h>

#include <algorithm>
#include <set>

#include "brc/errors.hpp"
#include "brc/patterns.hpp"
#include "brc/rng.hpp"
#include "support.hpp"

using namespace brc;

namespace {

const Waveform kMono = Waveform::monophasic(10.0, 20.0);

std::set<ElectrodeCoord> electrodes(const StimPattern& p) {
    std::set<ElectrodeCoord> s;
    for (const auto& pr : p.pairs) {
        s.insert(pr.positive);
        s.insert(pr.negative);
    }
    return s;
}

std::set<BipolarPair> pair_set(const StimPattern& p) { return {p.pairs.begin(), p.pairs.end()}; }

// Placement rule enumerated directly: all grid points on the line through
// the center with spacing 1 + dilation, nearest first.
std::vector<ElectrodeCoord> bar_oracle(int deg, ElectrodeCoord center, int n, int dilation) {
    int dr = 0, dc = 0;
    if (deg == 0) dc = 1;
    if (deg == 45) { dr = -1; dc = 1; }
    if (deg == 90) dr = -1;
    if (deg == 135) { dr = -1; dc = -1; }
    std::vector<ElectrodeCoord> out;
    for (int r = 0; r < 64; ++r) {
        for (int c = 0; c < 64; ++c) {
            for (int k = -(n - 1) / 2; k <= n / 2; ++k) {
                if (r == center.row + k * (1 + dilation) * dr && c == center.col + k * (1 + dilation) * dc) {
                    out.push_back({r, c});
                }
            }
        }
    }
    return out;
}

MnistImage uniform_image(std::uint8_t v, int label = 3) {
    MnistImage img;
    img.pixels.fill(v);
    img.label = label;
    return img;
}

}  // namespace

TEST_CASE("pointwise pattern is one right-pointing pair") {
    const auto p = make_pointwise({20, 20}, kMono, "p1");
    REQUIRE(p.pairs.size() == 1);
    CHECK(p.pairs[0].positive == ElectrodeCoord{20, 20});
    CHECK(p.pairs[0].negative == ElectrodeCoord{20, 21});
    CHECK(p.waveform.amplitude_uA == 10.0);
    CHECK(p.waveform.delta_plus_us == 20.0);
    CHECK(validate_pattern(p).empty());
    CHECK_THROWS_AS(make_pointwise({0, 63}, kMono, "edge"), BoundsError);
}

TEST_CASE("four distinct pointwise centers have disjoint electrodes") {
    const std::vector<ElectrodeCoord> centers{{28, 28}, {28, 36}, {36, 28}, {36, 36}};
    std::set<ElectrodeCoord> all;
    std::size_t total = 0;
    for (auto c : centers) {
        const auto e = electrodes(make_pointwise(c, kMono, "p"));
        total += e.size();
        all.insert(e.begin(), e.end());
    }
    CHECK(all.size() == total);
}

TEST_CASE("bar placement matches the enumerated oracle") {
    for (int deg : {0, 45, 90, 135}) {
        for (int n : {1, 2, 5}) {
            for (int dil : {1, 2}) {
                const auto p = make_bar(deg, {32, 32}, kMono, n, dil);
                std::set<ElectrodeCoord> got;
                for (const auto& pr : p.pairs) {
                    got.insert(pr.positive);
                    CHECK(pr.negative == ElectrodeCoord{pr.positive.row, pr.positive.col + 1});
                }
                const auto want = bar_oracle(deg, {32, 32}, n, dil);
                CHECK(got == std::set<ElectrodeCoord>(want.begin(), want.end()));
                CHECK(validate_pattern(p).empty());
            }
        }
    }
}

TEST_CASE("horizontal and vertical bars at the default center") {
    const auto h = make_bar(0, {32, 32}, kMono);
    std::vector<int> cols;
    for (const auto& pr : h.pairs) {
        CHECK(pr.positive.row == 32);
        cols.push_back(pr.positive.col);
    }
    std::sort(cols.begin(), cols.end());
    CHECK(cols == std::vector<int>{28, 30, 32, 34, 36});

    const auto v = make_bar(90, {32, 32}, kMono);
    std::vector<int> rows;
    for (const auto& pr : v.pairs) {
        CHECK(pr.positive.col == 32);
        rows.push_back(pr.positive.row);
    }
    std::sort(rows.begin(), rows.end());
    CHECK(rows == std::vector<int>{28, 30, 32, 34, 36});
}

TEST_CASE("all orientations share the center pair; single-pair bar is pointwise") {
    const BipolarPair center{{32, 32}, {32, 33}};
    for (int deg : {0, 45, 90, 135}) CHECK(pair_set(make_bar(deg, {32, 32}, kMono)).contains(center));
    CHECK(make_bar(45, {20, 20}, kMono, 1).pairs == make_pointwise({20, 20}, kMono, "x").pairs);
    CHECK_THROWS_AS(make_bar(0, {32, 2}, kMono), BoundsError);
    CHECK_THROWS_AS(make_bar(30, {32, 32}, kMono), ConfigError);
}

TEST_CASE("seven-segment encoding") {
    const std::vector<std::set<char>> table{{'a', 'b', 'c', 'd', 'e', 'f'}, {'b', 'c'}, {'a', 'b', 'd', 'e', 'g'},
                                            {'a', 'b', 'c', 'd', 'g'}, {'b', 'c', 'f', 'g'}, {'a', 'c', 'd', 'f', 'g'},
                                            {'a', 'c', 'd', 'e', 'f', 'g'}, {'a', 'b', 'c'},
                                            {'a', 'b', 'c', 'd', 'e', 'f', 'g'}, {'a', 'b', 'c', 'd', 'f', 'g'}};
    for (int d = 0; d < 10; ++d) {
        std::set<char> got;
        for (auto s : digit_segments(d)) got.insert(static_cast<char>('a' + static_cast<int>(s)));
        CHECK(got == table[static_cast<std::size_t>(d)]);
    }
    CHECK_THROWS_AS(digit_segments(10), ConfigError);
}

TEST_CASE("clock digits") {
    const ClockGeometry geom;
    CHECK(geom.validate().empty());
    const auto wf = Waveform::biphasic(4, 100, 100);
    std::vector<std::size_t> sizes;
    for (int d = 0; d < 10; ++d) {
        const auto p = make_clock_digit(d, geom, wf);
        CHECK(p.label == std::to_string(d));
        CHECK(validate_pattern(p).empty());
        sizes.push_back(electrodes(p).size());
    }
    // 8 lights every segment.
    CHECK(make_clock_digit(8, geom, wf).pairs.size() == 7u * geom.segment_length);
    // 1 has strictly the fewest electrodes.
    for (int d = 0; d < 10; ++d) {
        if (d != 1) CHECK(sizes[1] < sizes[static_cast<std::size_t>(d)]);
    }
    // 0 and 8 differ by exactly segment g.
    auto p0 = pair_set(make_clock_digit(0, geom, wf));
    auto p8 = pair_set(make_clock_digit(8, geom, wf));
    const auto g = geom.segments()[static_cast<int>(Segment::g)];
    std::set<BipolarPair> diff;
    std::set_difference(p8.begin(), p8.end(), p0.begin(), p0.end(), std::inserter(diff, diff.end()));
    CHECK(diff == std::set<BipolarPair>(g.begin(), g.end()));
    CHECK(std::includes(p8.begin(), p8.end(), p0.begin(), p0.end()));

    ClockGeometry bad{{60, 60}, 3};
    CHECK_FALSE(bad.validate().empty());
    CHECK_THROWS_AS(make_clock_digit(8, bad, wf), ConfigError);
}

TEST_CASE("MNIST IDX loader on synthetic files") {
    testing::TempDir dir;
    testing::write_bytes(dir / "img", testing::idx_images(5, 7));
    testing::write_bytes(dir / "lbl", testing::idx_labels(5));
    const auto imgs = load_mnist_idx(dir / "img", dir / "lbl");
    REQUIRE(imgs.size() == 5);
    CHECK(imgs[3].label == 3);
    CHECK(imgs[4].pixels[783] == 7);

    testing::write_bytes(dir / "badmagic", testing::idx_images(5, 7, 0x00000804));
    CHECK_THROWS_AS(load_mnist_idx(dir / "badmagic", dir / "lbl"), FormatError);

    testing::write_bytes(dir / "empty", {});
    try {
        load_mnist_idx(dir / "empty", dir / "lbl");
        FAIL("empty file accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("truncated header") != std::string::npos);
    }

    auto cut = testing::idx_images(5, 7);
    cut.resize(cut.size() - 100);
    testing::write_bytes(dir / "cut", cut);
    CHECK_THROWS_AS(load_mnist_idx(dir / "cut", dir / "lbl"), FormatError);

    testing::write_bytes(dir / "lbl4", testing::idx_labels(4));
    CHECK_THROWS_AS(load_mnist_idx(dir / "img", dir / "lbl4"), FormatError);
    testing::write_bytes(dir / "lblmagic", testing::idx_labels(5, 0x00000803));
    CHECK_THROWS_AS(load_mnist_idx(dir / "img", dir / "lblmagic"), FormatError);
}

TEST_CASE("MNIST t10k files load 10000 images") {
    const auto d = testing::mnist_dir();
    const auto img = d / "t10k-images-idx3-ubyte";
    const auto lbl = d / "t10k-labels-idx1-ubyte";
    if (!std::filesystem::exists(img) || !std::filesystem::exists(lbl)) {
        MESSAGE("MNIST files not present; skipped");
        return;
    }
    const auto all = load_mnist_idx(img, lbl);
    CHECK(all.size() == 10000);
    std::vector<int> per(10, 0);
    for (const auto& m : all) per[static_cast<std::size_t>(m.label)]++;
    CHECK(per[0] == 980);
    CHECK(per[1] == 1135);
}

TEST_CASE("subset sampling is seeded and without replacement") {
    std::vector<MnistImage> all(50);
    for (int i = 0; i < 50; ++i) all[i].pixels[0] = static_cast<std::uint8_t>(i);
    const auto a = sample_subset(all, 20, 9);
    const auto b = sample_subset(all, 20, 9);
    std::set<int> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].pixels == b[i].pixels);
        ids.insert(a[i].pixels[0]);
    }
    CHECK(ids.size() == 20);
    CHECK_THROWS_AS(sample_subset(all, 51, 1), ConfigError);
}

TEST_CASE("nearest-neighbour downsampling copies input values") {
    Rng rng(substream(3, "downsample"));
    for (int trial = 0; trial < 50; ++trial) {
        MnistImage img;
        for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.below(256));
        const std::set<std::uint8_t> input(img.pixels.begin(), img.pixels.end());
        for (int res : {1, 7, 14, 16, 28}) {
            const auto small = downsample_nearest(img, res);
            REQUIRE(small.size() == static_cast<std::size_t>(res * res));
            for (auto v : small) REQUIRE(input.contains(v));
        }
        CHECK(downsample_nearest(img, 28) == std::vector<std::uint8_t>(img.pixels.begin(), img.pixels.end()));
    }
}

TEST_CASE("stimulation probability is monotone with the stated end points") {
    CHECK(linear_dark_probability(0) == 1.0);
    CHECK(linear_dark_probability(255) == 0.0);
    for (int v = 0; v < 255; ++v) {
        CHECK(linear_dark_probability(static_cast<std::uint8_t>(v)) >=
              linear_dark_probability(static_cast<std::uint8_t>(v + 1)));
    }
}

TEST_CASE("map_mnist extremes, geometry and determinism") {
    const auto wf = Waveform::biphasic(5, 100, 100);
    const MnistMapping m;
    CHECK(map_mnist(uniform_image(255), m, wf, 1).pairs.empty());
    const auto black = map_mnist(uniform_image(0, 7), m, wf, 1);
    CHECK(black.pairs.size() == 256);
    CHECK(black.label == "7");
    CHECK(validate_pattern(black).empty());
    for (const auto& pr : black.pairs) {
        CHECK(pr.positive.row >= 24);
        CHECK(pr.positive.row < 40);
        CHECK((pr.positive.col - 16) % 2 == 0);
        CHECK(pr.negative.col == pr.positive.col + 1);
    }
    MnistImage img = uniform_image(0);
    for (int i = 0; i < 784; ++i) img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((i * 37) % 256);
    CHECK(map_mnist(img, m, wf, 5) == map_mnist(img, m, wf, 5));

    MnistMapping off = m;
    off.region_origin = {50, 40};
    CHECK_THROWS_AS(map_mnist(img, off, wf, 1), BoundsError);
}

TEST_CASE("map_mnist per-pixel firing frequency at grey 128") {
    const auto wf = Waveform::biphasic(5, 100, 100);
    const MnistMapping m;
    const auto img = uniform_image(128);
    std::vector<int> hits(256, 0);
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
        for (const auto& pr : map_mnist(img, m, wf, substream(11, "grey", {static_cast<std::uint64_t>(s)})).pairs) {
            hits[static_cast<std::size_t>((pr.positive.row - 24) * 16 + (pr.positive.col - 16) / 2)]++;
        }
    }
    for (int h : hits) CHECK(std::abs(h / static_cast<double>(trials) - 0.498) <= 0.02);
}
