#pragma once

// File formats of the acquisition side: raw trace binary ("BRC1"),
// ground-truth spike logs, detected event records and stimulation patterns.

#include <filesystem>
#include <vector>

#include "brc/culture.hpp"
#include "brc/dsp.hpp"

namespace brc {

/// "BRC1", then little-endian u32 n_channels, n_samples, sample_rate_hz,
/// t_stim_sample, then n_channels * n_samples f32, channel-major.
void save_raw(const RawRecording& rec, const std::filesystem::path& path);
/// Restores traces and the header fields; label, metadata and ground truth
/// are not part of the format.
RawRecording load_raw(const std::filesystem::path& path);

/// One "neuron,time_ms" line per spike, with a header line.
void save_spike_log(const std::vector<SpikeLogEntry>& log, const std::filesystem::path& path);
std::vector<SpikeLogEntry> load_spike_log(const std::filesystem::path& path);

/// "channel,t_sample,peak_uV,S,kept" per event; S needs snippets (empty
/// snippets are written as S = 0).
void save_event_records(const FilteredEvents& events, const std::filesystem::path& path);

/// One JSON object per line:
/// {"label": "...", "waveform": {"shape", "amplitude_uA", "delta_plus_us",
/// "delta_minus_us"}, "pairs": [[r+, c+, r-, c-], ...]}.
void save_patterns(const std::vector<StimPattern>& patterns, const std::filesystem::path& path);
std::vector<StimPattern> load_patterns(const std::filesystem::path& path);

}  // namespace brc
