#pragma once

// Workbench configuration: one JSON document with a section per module.
// Missing keys keep their defaults; unknown keys are rejected so typos do
// not silently fall back to defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "brc/ar.hpp"
#include "brc/culture.hpp"
#include "brc/dsp.hpp"
#include "brc/patterns.hpp"
#include "brc/readout.hpp"

namespace brc {

struct ProtocolConfig {
    int repetitions = 20;          // per pattern, pointwise/bars/clock
    int mnist_repetitions = 1;     // per image
    double isi_s = 10.0;           // recorded as metadata only
    int n_replicates = 3;
    int n_days = 3;
    double W_ms = 5.0;
    double W_ms_mnist = 10.0;
    std::vector<double> W_list{5, 10, 20, 30, 40, 50};
    int k_folds = 5;
    int mask_margin = 2;
    int noise_windows = 30;        // spontaneous windows for the AR noise model
    std::uint64_t seed = 42;

    std::vector<std::string> validate() const;
    bool operator==(const ProtocolConfig&) const = default;
};

struct PatternConfig {
    std::vector<ElectrodeCoord> point_centers{{28, 28}, {28, 36}, {36, 28}, {36, 36}};
    Waveform point_waveform = Waveform::monophasic(10.0, 20.0);

    ElectrodeCoord bar_center{32, 32};
    int bar_pairs = 5;
    int bar_dilation = 1;
    Waveform bar_waveform = Waveform::monophasic(10.0, 20.0);

    ClockGeometry clock;
    Waveform clock_waveform = Waveform::biphasic(4.0, 100.0, 100.0);

    std::filesystem::path mnist_images;
    std::filesystem::path mnist_labels;
    int mnist_subset = 200;
    int mnist_resolution = 16;
    ElectrodeCoord mnist_origin{24, 16};
    Waveform mnist_waveform = Waveform::biphasic(5.0, 100.0, 100.0);
};

struct WorkbenchConfig {
    CultureConfig culture;
    DayDrift drift;
    DetectorConfig detector;
    ArtifactFilter filter;
    TrainConfig readout;
    EsnConfig esn;
    ProtocolConfig protocol;
    PatternConfig patterns;

    /// Every problem across all sections, prefixed by section name.
    std::vector<std::string> validate() const;
};

nlohmann::json to_json(const WorkbenchConfig& cfg);
/// Overlays `j` on the defaults. Throws ConfigError naming the offending key.
WorkbenchConfig config_from_json(const nlohmann::json& j);
WorkbenchConfig load_config(const std::filesystem::path& path);
void save_config(const WorkbenchConfig& cfg, const std::filesystem::path& path);

}  // namespace brc
