#include "brc/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "brc/errors.hpp"

namespace brc {

namespace {

int ms_to_samples(double ms) { return static_cast<int>(std::lround(ms * kSampleRateHz / 1000.0)); }

}  // namespace

std::vector<std::string> DetectorConfig::validate() const {
    std::vector<std::string> out;
    if (!(thr_l > 0.0)) out.push_back("thr_l must be > 0");
    if (!(thr_h >= thr_l)) out.push_back("thr_h must be >= thr_l");
    if (!(w_s_ms > 0.0)) out.push_back("w_s_ms must be > 0");
    if (!(snippet_ms > 0.0)) out.push_back("snippet_ms must be > 0");
    if (refractory_ms < 0.0) out.push_back("refractory_ms must be >= 0");
    return out;
}

std::vector<SpikeEvent> detect_spikes(std::span<const float> trace, const DetectorConfig& cfg, int channel) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError("detector: " + v.front());
    const int n = static_cast<int>(trace.size());
    if (n < 2) throw DataError("detect_spikes needs at least 2 samples");

    // Pass 1: global noise estimate and candidate threshold.
    double sum = 0.0, sum2 = 0.0;
    for (float x : trace) {
        sum += x;
        sum2 += static_cast<double>(x) * x;
    }
    const double mean = sum / n;
    const double sigma = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
    if (sigma == 0.0) return {};
    const double low = cfg.thr_l * sigma;

    // Pass 2: excise +-w_s around every low-threshold crossing, re-estimate.
    const int ws = std::max(1, ms_to_samples(cfg.w_s_ms));
    std::vector<int> cover(n + 1, 0);
    bool any_low = false;
    for (int t = 0; t < n; ++t) {
        if (std::abs(trace[t]) > low) {
            any_low = true;
            cover[std::max(0, t - ws)] += 1;
            cover[std::min(n, t + ws + 1)] -= 1;
        }
    }
    if (!any_low) return {};

    double rs = 0.0, rs2 = 0.0;
    int kept = 0, depth = 0;
    for (int t = 0; t < n; ++t) {
        depth += cover[t];
        if (depth == 0) {
            rs += trace[t];
            rs2 += static_cast<double>(trace[t]) * trace[t];
            ++kept;
        }
    }
    double sigma_n = sigma;
    if (kept >= 2) {
        const double m = rs / kept;
        sigma_n = std::sqrt(std::max(0.0, rs2 / kept - m * m));
    }
    const double confirm = std::max(low, cfg.thr_h * sigma_n);

    // Confirmation: |V| above both thresholds and the largest |V| within one
    // refractory period on either side (earliest sample wins ties).
    const int peak_half = std::max(1, ms_to_samples(cfg.refractory_ms));
    const int half = std::max(1, ms_to_samples(cfg.snippet_ms));
    std::vector<SpikeEvent> found;
    for (int t = 0; t < n; ++t) {
        const float a = std::abs(trace[t]);
        if (!(a > confirm)) continue;
        bool is_max = true;
        for (int u = std::max(0, t - peak_half); u <= std::min(n - 1, t + peak_half) && is_max; ++u) {
            const float b = std::abs(trace[u]);
            if (b > a || (b == a && u < t)) is_max = false;
        }
        if (!is_max) continue;
        const int lo = std::max(0, t - half);
        const int hi = std::min(n - 1, t + half);
        SpikeEvent e;
        e.channel = channel;
        e.t_sample = t;
        e.peak_uV = trace[t];
        e.snippet.assign(trace.begin() + lo, trace.begin() + hi + 1);
        found.push_back(std::move(e));
    }

    // One event per refractory window, largest |peak| first.
    const int refr = ms_to_samples(cfg.refractory_ms);
    if (refr > 0 && found.size() > 1) {
        std::vector<std::size_t> order(found.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(found[a].peak_uV) > std::abs(found[b].peak_uV);
        });
        std::vector<char> keep(found.size(), 0);
        std::vector<int> accepted;
        for (auto i : order) {
            bool clash = false;
            for (int t : accepted) {
                if (std::abs(t - found[i].t_sample) < refr) {
                    clash = true;
                    break;
                }
            }
            if (!clash) {
                keep[i] = 1;
                accepted.push_back(found[i].t_sample);
            }
        }
        std::vector<SpikeEvent> out;
        for (std::size_t i = 0; i < found.size(); ++i) {
            if (keep[i]) out.push_back(std::move(found[i]));
        }
        return out;
    }
    return found;
}

double normalized_area(std::span<const float> snippet) {
    if (snippet.empty()) throw DataError("normalized_area of an empty snippet");
    double total = 0.0, peak = 0.0;
    for (float x : snippet) {
        const double a = std::abs(static_cast<double>(x));
        total += a;
        peak = std::max(peak, a);
    }
    if (peak == 0.0) throw DataError("normalized_area is undefined for an all-zero snippet");
    return total / peak;
}

bool is_artifact(const SpikeEvent& e, const ArtifactFilter& f) {
    if (std::abs(e.peak_uV) > f.v_thr_uV) return true;
    return normalized_area(e.snippet) > f.w_thr;
}

FilteredEvents remove_artifacts(std::vector<SpikeEvent> events, const ArtifactFilter& f) {
    FilteredEvents out;
    for (auto& e : events) {
        if (e.snippet.empty()) throw DataError("remove_artifacts needs waveform snippets on every event");
        (is_artifact(e, f) ? out.rejected : out.kept).push_back(std::move(e));
    }
    return out;
}

ChannelMask stim_mask(const StimPattern& p, int margin) {
    ChannelMask mask;
    margin = std::max(0, margin);
    for (auto e : pattern_electrodes(p)) {
        for (int r = e.row - margin; r <= e.row + margin; ++r) {
            for (int c = e.col - margin; c <= e.col + margin; ++c) {
                if (in_bounds({r, c})) mask.set(static_cast<std::size_t>(r * kGridSide + c));
            }
        }
    }
    return mask;
}

int window_samples(double W_ms) { return ms_to_samples(W_ms); }

ReservoirState extract_state(std::span<const SpikeEvent> events, int t_stim_sample, double W_ms,
                             const ChannelMask& mask) {
    if (!(W_ms > 0.0)) throw ConfigError("extract_state: W must be > 0 ms");
    ReservoirState s;
    s.mask = mask;
    s.meta.W_ms = W_ms;
    s.meta.t_stim_sample = t_stim_sample;
    const long end = static_cast<long>(t_stim_sample) + window_samples(W_ms);
    for (const auto& e : events) {
        if (e.channel < 0 || e.channel >= kNumChannels) throw BoundsError("event channel out of range");
        if (e.t_sample >= t_stim_sample && e.t_sample <= end && !mask.test(e.channel)) {
            ++s.counts[e.channel];
        }
    }
    return s;
}

DetectionResult process_recording(const RawRecording& rec, const DetectorConfig& det,
                                  const ArtifactFilter& filt, bool keep_snippets) {
    DetectionResult out;
    out.t_stim_sample = rec.t_stim_sample;
    out.n_samples = rec.n_samples;
    for (int ch = 0; ch < rec.n_channels; ++ch) {
        auto events = detect_spikes(rec.channel(ch), det, ch);
        for (auto& e : events) {
            const bool artifact = is_artifact(e, filt);
            if (!keep_snippets) e.snippet = std::vector<float>();
            (artifact ? out.events.rejected : out.events.kept).push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace brc
