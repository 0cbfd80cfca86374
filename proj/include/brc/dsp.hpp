#pragma once

// Acquisition pipeline: double-threshold spike detection, artifact removal
// by amplitude and normalized area, and per-electrode evoked spike counts.

#include <bitset>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brc/culture.hpp"
#include "brc/grid.hpp"

namespace brc {

struct DetectorConfig {
    double thr_l = 3.0;       // candidate threshold, multiples of sigma
    double thr_h = 5.0;       // confirmation threshold, multiples of sigma_n
    double w_s_ms = 2.0;      // half-width excised around low-threshold crossings
    double snippet_ms = 2.0;  // half-width of the stored waveform
    double refractory_ms = 1.0;

    std::vector<std::string> validate() const;
};

struct SpikeEvent {
    std::int32_t channel = 0;
    std::int32_t t_sample = 0;
    float peak_uV = 0.0f;          // signed value at the event
    std::vector<float> snippet;    // centered on t_sample, clipped at trace edges
};

/// Detects events on one channel. A constant trace (sigma = 0) yields none.
std::vector<SpikeEvent> detect_spikes(std::span<const float> trace, const DetectorConfig& cfg,
                                      int channel = 0);

/// S = sum|V| / max|V|. Throws DataError for empty or all-zero input.
double normalized_area(std::span<const float> snippet);

struct ArtifactFilter {
    double v_thr_uV = 500.0;
    double w_thr = 25.0;
};

struct FilteredEvents {
    std::vector<SpikeEvent> kept;
    std::vector<SpikeEvent> rejected;
};

bool is_artifact(const SpikeEvent& e, const ArtifactFilter& f);
FilteredEvents remove_artifacts(std::vector<SpikeEvent> events, const ArtifactFilter& f = {});

using ChannelMask = std::bitset<kNumChannels>;

/// Channels within Chebyshev distance `margin` of any stimulated electrode,
/// clipped to the grid.
ChannelMask stim_mask(const StimPattern& p, int margin = 2);

struct StateMeta {
    double W_ms = 0.0;
    int t_stim_sample = 0;
    int replicate = 0;
    int day = 0;
    int session = 0;
    int stimulus_index = -1;
};

struct ReservoirState {
    std::vector<std::int32_t> counts = std::vector<std::int32_t>(kNumChannels, 0);
    ChannelMask mask;
    std::string label;
    StateMeta meta;
};

/// Window length in samples for a W in milliseconds at 20 kHz.
int window_samples(double W_ms);

/// counts[ch] = #events with t_stim <= t <= t_stim + W (both ends inclusive),
/// zeroed where the mask is set.
ReservoirState extract_state(std::span<const SpikeEvent> events, int t_stim_sample, double W_ms,
                             const ChannelMask& mask);

struct DetectionResult {
    FilteredEvents events;
    int t_stim_sample = 0;
    int n_samples = 0;
};

/// Detect on every channel of a recording, then filter artifacts.
DetectionResult process_recording(const RawRecording& rec, const DetectorConfig& det,
                                  const ArtifactFilter& filt, bool keep_snippets = false);

}  // namespace brc
