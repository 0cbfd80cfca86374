#include <doctest.h>

#include <cstring>
#include <fstream>

#include "brc/config.hpp"
#include "brc/errors.hpp"
#include "brc/exports.hpp"
#include "brc/patterns.hpp"
#include "brc/recording_io.hpp"
#include "brc/rng.hpp"
#include "support.hpp"

using namespace brc;

namespace {

RawRecording random_recording(int n_channels, int n_samples, std::uint64_t seed) {
    Rng rng(seed);
    RawRecording r;
    r.n_channels = n_channels;
    r.n_samples = n_samples;
    r.t_stim_sample = n_samples / 3;
    r.traces.resize(static_cast<std::size_t>(n_channels) * n_samples);
    for (auto& v : r.traces) v = static_cast<float>(rng.normal(0.0, 50.0));
    r.traces[0] = -0.0f;
    r.traces[1] = 1e-42f;  // denormal
    return r;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

}  // namespace

TEST_CASE("raw recording round trip is bit exact") {
    testing::TempDir dir;
    const auto r = random_recording(kNumChannels, 60, 3);
    save_raw(r, dir / "r.brc");
    CHECK(std::filesystem::file_size(dir / "r.brc") == 20u + 4u * kNumChannels * 60u);
    const auto back = load_raw(dir / "r.brc");
    CHECK(back.n_channels == r.n_channels);
    CHECK(back.n_samples == r.n_samples);
    CHECK(back.sample_rate_hz == 20000);
    CHECK(back.t_stim_sample == r.t_stim_sample);
    REQUIRE(back.traces.size() == r.traces.size());
    CHECK(std::memcmp(back.traces.data(), r.traces.data(), r.traces.size() * sizeof(float)) == 0);
    // Saving the loaded copy reproduces the file byte for byte.
    save_raw(back, dir / "again.brc");
    CHECK(testing::read_bytes(dir / "r.brc") == testing::read_bytes(dir / "again.brc"));
}

TEST_CASE("raw recording corruption is reported") {
    testing::TempDir dir;
    save_raw(random_recording(4, 10, 1), dir / "ok.brc");
    const auto bytes = testing::read_bytes(dir / "ok.brc");
    auto bad = bytes;
    bad[1] = 'X';
    testing::write_bytes(dir / "magic.brc", bad);
    CHECK_THROWS_AS(load_raw(dir / "magic.brc"), FormatError);
    auto cut = bytes;
    cut.pop_back();
    testing::write_bytes(dir / "cut.brc", cut);
    CHECK_THROWS_AS(load_raw(dir / "cut.brc"), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    testing::write_bytes(dir / "extra.brc", extra);
    CHECK_THROWS_AS(load_raw(dir / "extra.brc"), FormatError);
    testing::write_bytes(dir / "empty.brc", {});
    CHECK_THROWS_AS(load_raw(dir / "empty.brc"), FormatError);
    CHECK_THROWS_AS(load_raw(dir / "absent.brc"), FormatError);
}

TEST_CASE("spike log round trip") {
    testing::TempDir dir;
    Rng rng(2);
    std::vector<SpikeLogEntry> log;
    for (int i = 0; i < 500; ++i) log.push_back({static_cast<std::int32_t>(rng.below(4096)), rng.uniform(0, 130)});
    save_spike_log(log, dir / "s.csv");
    const auto back = load_spike_log(dir / "s.csv");
    REQUIRE(back.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(back[i].neuron == log[i].neuron);
        CHECK(back[i].time_ms == log[i].time_ms);
    }
    write_text(dir / "bad.csv", "neuron,time_ms\n3,abc\n");
    CHECK_THROWS_AS(load_spike_log(dir / "bad.csv"), FormatError);
}

TEST_CASE("event records") {
    testing::TempDir dir;
    FilteredEvents ev;
    SpikeEvent k;
    k.channel = 5;
    k.t_sample = 100;
    k.peak_uV = -80.0f;
    k.snippet = {-40.0f, -80.0f, 20.0f};
    ev.kept.push_back(k);
    SpikeEvent r = k;
    r.peak_uV = -900.0f;
    r.snippet.clear();
    ev.rejected.push_back(r);
    save_event_records(ev, dir / "e.csv");
    std::ifstream in(dir / "e.csv");
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "channel,t_sample,peak_uV,S,kept");
    CHECK(l1 == "5,100,-80,1.75,1");
    CHECK(l2 == "5,100,-900,0,0");
}

TEST_CASE("pattern files round trip") {
    testing::TempDir dir;
    std::vector<StimPattern> ps{make_pointwise({3, 4}, Waveform::monophasic(10, 20), "p1"),
                                make_bar(135, {32, 32}, Waveform::monophasic(10, 20)),
                                make_clock_digit(8, ClockGeometry{}, Waveform::biphasic(4, 100, 100))};
    StimPattern wide{"wide", {{{1, 1}, {1, 5}}}, Waveform::biphasic(5, 100, 100), true};
    ps.push_back(wide);
    MnistImage img;
    img.pixels.fill(100);
    ps.push_back(map_mnist(img, MnistMapping{}, Waveform::biphasic(5, 100, 100), 9));
    save_patterns(ps, dir / "p.jsonl");
    CHECK(load_patterns(dir / "p.jsonl") == ps);

    write_text(dir / "bad.jsonl", "{\"label\":\"x\",\"waveform\":{\"shape\":\"triangle\",\"amplitude_uA\":1,"
                                  "\"delta_plus_us\":1,\"delta_minus_us\":0},\"pairs\":[[0,0,0,1]]}\n");
    CHECK_THROWS_AS(load_patterns(dir / "bad.jsonl"), FormatError);
    write_text(dir / "broken.jsonl", "{\"label\": \n");
    try {
        load_patterns(dir / "broken.jsonl");
        FAIL("broken JSON accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("config round trip and strict keys") {
    WorkbenchConfig cfg;
    cfg.culture.n_neurons = 2000;
    cfg.protocol.W_list = {5, 15};
    cfg.protocol.seed = 7;
    cfg.patterns.point_centers = {{10, 10}, {20, 20}};
    cfg.patterns.clock_waveform = Waveform::biphasic(3, 50, 60);
    cfg.readout.standardize = false;
    cfg.esn.rho = 0.8;
    const auto j = to_json(cfg);
    CHECK(to_json(config_from_json(j)) == j);
    const auto back = config_from_json(j);
    CHECK(back.culture == cfg.culture);
    CHECK(back.protocol == cfg.protocol);
    CHECK(back.readout == cfg.readout);
    CHECK(back.esn == cfg.esn);
    CHECK(back.patterns.point_centers == cfg.patterns.point_centers);
    CHECK(back.patterns.clock_waveform == cfg.patterns.clock_waveform);

    // Partial documents overlay the defaults.
    const auto partial = config_from_json(nlohmann::json::parse(R"({"protocol": {"n_days": 2}})"));
    CHECK(partial.protocol.n_days == 2);
    CHECK(partial.protocol.repetitions == 20);

    try {
        config_from_json(nlohmann::json::parse(R"({"protocol": {"n_dayz": 2}})"));
        FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("protocol.n_dayz") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"protocol": {"n_days": "two"}})")), ConfigError);

    testing::TempDir dir;
    save_config(cfg, dir / "c.json");
    CHECK(to_json(load_config(dir / "c.json")) == j);
    write_text(dir / "bad.json", "{");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
}

TEST_CASE("shipped default config equals the built-in defaults") {
    const std::filesystem::path path = std::filesystem::path(BRC_TEST_SOURCE_DIR) / "configs" / "default.json";
    auto loaded = load_config(path);
    CHECK(loaded.validate().empty());
    CHECK(loaded.patterns.mnist_images.is_absolute());
    loaded.patterns.mnist_images.clear();
    loaded.patterns.mnist_labels.clear();
    CHECK(to_json(loaded) == to_json(WorkbenchConfig{}));
}

TEST_CASE("validation catches protocol limits") {
    WorkbenchConfig cfg;
    CHECK(cfg.validate().empty());
    cfg.protocol.repetitions = 19;
    CHECK_FALSE(cfg.validate().empty());
    cfg = {};
    cfg.protocol.noise_windows = 20;
    CHECK_FALSE(cfg.validate().empty());
}

TEST_CASE("state matrix CSV round trip") {
    testing::TempDir dir;
    LabeledDataset ds;
    ds.class_names = {"a", "b"};
    Rng rng(6);
    for (int i = 0; i < 6; ++i) {
        std::vector<double> x(kNumChannels);
        for (auto& v : x) v = static_cast<double>(rng.poisson(0.3));
        x[7] = 0.1 + i / 3.0;  // non-integer values survive too
        ds.features.push_back(x);
        ds.labels.push_back(i % 2);
        StateMeta m;
        m.W_ms = 5.0;
        m.replicate = 1;
        m.day = 2;
        m.session = 2;
        m.stimulus_index = i;
        ds.meta.push_back(m);
    }
    write_states_csv(ds, dir / "s.csv");
    const auto back = read_states_csv(dir / "s.csv");
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.class_names == ds.class_names);
    REQUIRE(back.meta.size() == 6);
    CHECK(back.meta[3].stimulus_index == 3);
    CHECK(back.meta[3].day == 2);
    CHECK(back.meta[3].W_ms == 5.0);

    std::ifstream in(dir / "s.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.starts_with("sample,label,replicate,day,session,stimulus_index,W_ms,ch0,ch1,"));
    CHECK(header.ends_with(",ch4095"));
}

TEST_CASE("double formatting is shortest round trip") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
    CHECK(format_double(0.1) == "0.1");
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal(0, 1e3);
        CHECK(std::stod(format_double(v)) == v);
    }
}
