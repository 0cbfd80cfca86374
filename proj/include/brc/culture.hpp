#pragma once

// Synthetic stand-in for the living reservoir: a seeded current-based
// leaky integrate-and-fire network laid out over the electrode grid, with
// Poisson background drive, bipolar stimulation coupling, extracellular
// trace synthesis (spike templates, stimulation artifacts, Gaussian noise)
// and a day-to-day connectivity drift model.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brc/grid.hpp"

namespace brc {

struct ArtifactConfig {
    int radius = 1;                      // Chebyshev footprint around each stimulated electrode
    double high_fraction = 0.5;          // share of channels that get the high-amplitude kind
    double high_min_uV = 600.0;
    double high_max_uV = 1200.0;
    double high_tau_ms = 0.5;
    double long_min_uV = 250.0;
    double long_max_uV = 450.0;
    double long_tau_ms = 4.0;

    bool operator==(const ArtifactConfig&) const = default;
};

struct CultureConfig {
    int n_neurons = 4096;
    double frac_inhibitory = 0.2;
    double connect_sigma = 4.0;          // electrode pitches
    double mean_out_degree = 40.0;
    double syn_weight_mean = 2.5;        // mV
    double syn_weight_std = 0.8;         // mV
    double inhibitory_scale = 7.0;       // |w_inh| = scale * |w_exc draw|
    double delay_base_ms = 1.0;
    double delay_per_pitch_ms = 0.2;
    double inh_delay_extra_ms = 2.0;     // disynaptic-like lag of inhibitory synapses

    double membrane_tau_ms = 20.0;
    double refractory_ms = 2.0;
    double threshold_mV = -50.0;
    double reset_mV = -65.0;
    double rest_mV = -65.0;

    double spont_rate_hz = 2.0;          // Poisson background kicks per neuron
    double spont_kick_mV = 20.0;

    double coupling_radius = 3.0;        // pitches around a positive pole
    double stim_gain_mV_per_pC = 0.6;
    double stim_latency_ms = 0.5;

    double spike_amp_min_uV = 50.0;      // per-neuron template amplitude range
    double spike_amp_max_uV = 110.0;
    double spike_spread = 0.6;           // Gaussian fall-off length (pitches)
    double spike_radius = 2.0;           // channels beyond this get nothing
    double noise_uV = 5.0;
    ArtifactConfig artifact;

    double dt_ms = 0.1;
    double warmup_ms = 50.0;
    double pre_ms = 25.0;
    double post_ms = 55.0;

    std::uint64_t seed = 1;

    std::vector<std::string> validate() const;
    bool operator==(const CultureConfig&) const = default;
};

struct Synapse {
    std::int32_t target;
    float weight;          // mV
    std::uint16_t delay;   // steps

    bool operator==(const Synapse&) const = default;
};

struct NeuronPosition {
    double row;
    double col;

    bool operator==(const NeuronPosition&) const = default;
};

struct Culture {
    CultureConfig cfg;
    std::vector<NeuronPosition> positions;
    std::vector<std::uint8_t> inhibitory;
    std::vector<float> spike_amp_uV;
    // Outgoing synapses of neuron i are syn[offsets[i] .. offsets[i+1]).
    std::vector<std::uint32_t> offsets;
    std::vector<Synapse> syn;
    int day_index = 0;
    double kernel_gain = 0.0;  // calibrated p0 of p_ij = min(1, p0 * exp(-d^2 / 2 sigma^2))

    std::size_t synapse_count() const { return syn.size(); }
    std::span<const Synapse> outgoing(int neuron) const {
        return {syn.data() + offsets[neuron], syn.data() + offsets[neuron + 1]};
    }
    double mean_out_degree() const;
    double connection_probability(int from, int to) const;
    /// Neurons whose soma lies within `radius` pitches of an electrode.
    std::vector<int> neurons_near(ElectrodeCoord e, double radius) const;

    bool operator==(const Culture&) const = default;
};

Culture grow_culture(const CultureConfig& cfg);

struct DayDrift {
    double rewire_frac = 0.15;
    double weight_jitter_cv = 0.2;
};

/// Next day's culture: rewires a fraction of synapses to fresh kernel-drawn
/// targets and applies mean-one lognormal jitter to the survivors.
Culture advance_day(const Culture& c, const DayDrift& drift);

struct SpikeLogEntry {
    std::int32_t neuron;
    double time_ms;  // relative to the first recorded sample
};

struct RenderedSpike {
    std::int32_t channel;
    std::int32_t trough_sample;
    float amplitude_uV;
    std::int32_t neuron;
};

struct RenderedArtifact {
    std::int32_t channel;
    std::int32_t onset_sample;
    std::int32_t end_sample;
    float peak_uV;
    bool high_amplitude;
};

struct GroundTruth {
    std::vector<SpikeLogEntry> spikes;
    std::vector<RenderedSpike> rendered;
    std::vector<RenderedArtifact> artifacts;
};

struct RecordingMeta {
    int replicate = 0;
    int day = 0;
    int session = 0;
    int stimulus_index = -1;
    double isi_s = 10.0;
    bool has_stimulus = false;
};

struct RawRecording {
    int n_channels = kNumChannels;
    int n_samples = 0;
    int sample_rate_hz = kSampleRateHz;
    int t_stim_sample = 0;
    std::vector<float> traces;  // channel-major, uV
    std::string label;
    RecordingMeta meta;
    GroundTruth truth;

    std::span<const float> channel(int ch) const {
        return {traces.data() + static_cast<std::size_t>(ch) * n_samples, static_cast<std::size_t>(n_samples)};
    }
    std::span<float> channel(int ch) {
        return {traces.data() + static_cast<std::size_t>(ch) * n_samples, static_cast<std::size_t>(n_samples)};
    }
};

RawRecording spontaneous_window(const Culture& c, double duration_ms, std::uint64_t seed);

/// Delivers one stimulus and records pre_ms before / post_ms after onset.
/// The network starts from a randomized state and relaxes for the configured
/// warm-up, standing in for the inter-stimulus interval.
RawRecording stimulate(const Culture& c, const StimPattern& p, double pre_ms, double post_ms,
                       std::uint64_t seed);
RawRecording stimulate(const Culture& c, const StimPattern& p, std::uint64_t seed);

/// Unit-peak (trough = -1) extracellular spike template on the 20 kHz grid.
std::span<const float> spike_template();
/// Sample offset of the template trough.
int spike_template_trough();

}  // namespace brc
