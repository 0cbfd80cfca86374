#include "brc/culture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "brc/errors.hpp"
#include "brc/rng.hpp"

namespace brc {

namespace {

constexpr int kTemplateLen = 20;  // 1 ms at 20 kHz
constexpr int kTemplateTrough = 4;

std::array<float, kTemplateLen> build_template() {
    std::array<double, kTemplateLen> raw{};
    for (int t = 0; t < kTemplateLen; ++t) {
        const double a = (t - kTemplateTrough) / 1.5;
        const double b = (t - 9.0) / 3.0;
        raw[t] = -std::exp(-0.5 * a * a) + 0.3 * std::exp(-0.5 * b * b);
    }
    const double depth = -raw[kTemplateTrough];
    std::array<float, kTemplateLen> out{};
    for (int t = 0; t < kTemplateLen; ++t) out[t] = static_cast<float>(raw[t] / depth);
    return out;
}

const std::array<float, kTemplateLen>& template_storage() {
    static const auto tmpl = build_template();
    return tmpl;
}

// Unit-variance Gaussian samples shared by all recordings. Each channel reads
// a randomly offset, randomly signed slice, which is far cheaper than fresh
// draws for 4096 x thousands of samples per stimulus.
constexpr std::size_t kNoiseBankSize = std::size_t{1} << 22;

const std::vector<float>& noise_bank() {
    static const std::vector<float> bank = [] {
        std::vector<float> b(kNoiseBankSize);
        std::mt19937_64 eng(0x5EED0F0153ULL);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (auto& x : b) x = static_cast<float>(nd(eng));
        return b;
    }();
    return bank;
}

double sq(double x) { return x * x; }

double dist2(const NeuronPosition& a, const NeuronPosition& b) {
    return sq(a.row - b.row) + sq(a.col - b.col);
}

double dist2(const NeuronPosition& a, ElectrodeCoord e) {
    return sq(a.row - e.row) + sq(a.col - e.col);
}

float draw_weight(const CultureConfig& cfg, bool inhibitory, Rng& rng) {
    double w = std::max(0.05 * cfg.syn_weight_mean, rng.normal(cfg.syn_weight_mean, cfg.syn_weight_std));
    if (inhibitory) w = -cfg.inhibitory_scale * w;
    return static_cast<float>(w);
}

std::uint16_t delay_steps(const CultureConfig& cfg, bool inhibitory, double d) {
    const double ms = cfg.delay_base_ms + cfg.delay_per_pitch_ms * d + (inhibitory ? cfg.inh_delay_extra_ms : 0.0);
    return static_cast<std::uint16_t>(std::max(1L, std::lround(ms / cfg.dt_ms)));
}

double kernel(const CultureConfig& cfg, double d2) {
    return std::exp(-d2 / (2.0 * cfg.connect_sigma * cfg.connect_sigma));
}

double kernel_cutoff2(const CultureConfig& cfg) { return sq(6.0 * cfg.connect_sigma); }

int samples_per_step(const CultureConfig& cfg) {
    return static_cast<int>(std::lround(cfg.dt_ms * kSampleRateHz / 1000.0));
}

// Stimulation drive per neuron (mV), empty when there is no stimulus.
std::vector<float> stimulation_kicks(const Culture& c, const StimPattern& p) {
    std::vector<float> kick;
    const double charge_pC = p.waveform.amplitude_uA * p.waveform.delta_plus_us;
    if (charge_pC <= 0.0) return kick;
    kick.assign(c.positions.size(), 0.0f);
    const double r2 = sq(c.cfg.coupling_radius);
    for (const auto& pair : p.pairs) {
        for (std::size_t i = 0; i < c.positions.size(); ++i) {
            const double d2 = dist2(c.positions[i], pair.positive);
            if (d2 <= r2) {
                kick[i] += static_cast<float>(c.cfg.stim_gain_mV_per_pC * charge_pC / (1.0 + d2));
            }
        }
    }
    return kick;
}

struct SimSpike {
    std::int32_t neuron;
    std::int32_t step;  // relative to the first recorded step
};

// Runs warm-up + recording. `stim_step` is relative to the recording start
// (ignored when `kicks` is empty).
std::vector<SimSpike> simulate(const Culture& c, int record_steps, int stim_step,
                               const std::vector<float>& kicks, Rng& rng) {
    const auto& cfg = c.cfg;
    const int n = static_cast<int>(c.positions.size());
    const int warm = static_cast<int>(std::lround(cfg.warmup_ms / cfg.dt_ms));
    const int total = warm + record_steps;
    const int latency = static_cast<int>(std::lround(cfg.stim_latency_ms / cfg.dt_ms));
    const int ref_steps = static_cast<int>(std::lround(cfg.refractory_ms / cfg.dt_ms));
    const float decay = static_cast<float>(std::exp(-cfg.dt_ms / cfg.membrane_tau_ms));
    const float rest = static_cast<float>(cfg.rest_mV);
    const float reset = static_cast<float>(cfg.reset_mV);
    const float thr = static_cast<float>(cfg.threshold_mV);

    int max_delay = latency;
    for (const auto& s : c.syn) max_delay = std::max<int>(max_delay, s.delay);
    const int ring_len = max_delay + 1;
    std::vector<float> ring(static_cast<std::size_t>(ring_len) * n, 0.0f);

    std::vector<float> v(n);
    std::vector<int> refr(n, 0);
    for (int i = 0; i < n; ++i) v[i] = static_cast<float>(rng.uniform(cfg.reset_mV, cfg.threshold_mV));

    const double bg_mean = n * cfg.spont_rate_hz * cfg.dt_ms * 1e-3;
    const int stim_abs = warm + stim_step;

    std::vector<SimSpike> log;
    std::vector<int> fired;
    for (int step = 0; step < total; ++step) {
        float* in = ring.data() + static_cast<std::size_t>(step % ring_len) * n;

        const auto kicks_now = rng.poisson(bg_mean);
        for (std::uint64_t k = 0; k < kicks_now; ++k) in[rng.below(n)] += static_cast<float>(cfg.spont_kick_mV);

        if (!kicks.empty() && step == stim_abs) {
            float* target = ring.data() + static_cast<std::size_t>((step + latency) % ring_len) * n;
            for (int i = 0; i < n; ++i) target[i] += kicks[i];
        }

        fired.clear();
        for (int i = 0; i < n; ++i) {
            if (refr[i] > 0) {
                --refr[i];
                v[i] = reset;
            } else {
                v[i] = rest + (v[i] - rest) * decay + in[i];
                if (v[i] >= thr) {
                    fired.push_back(i);
                    v[i] = reset;
                    refr[i] = ref_steps;
                }
            }
            in[i] = 0.0f;
        }

        for (int i : fired) {
            for (const auto& s : c.outgoing(i)) {
                ring[static_cast<std::size_t>((step + s.delay) % ring_len) * n + s.target] += s.weight;
            }
            if (step >= warm) log.push_back({i, step - warm});
        }
    }
    return log;
}

RawRecording render(const Culture& c, int record_steps, int stim_sample, const std::vector<SimSpike>& spikes,
                    const StimPattern* pattern, Rng& rng) {
    const auto& cfg = c.cfg;
    const int sps = samples_per_step(cfg);
    RawRecording rec;
    rec.n_samples = record_steps * sps;
    rec.t_stim_sample = stim_sample;
    rec.traces.assign(static_cast<std::size_t>(kNumChannels) * rec.n_samples, 0.0f);

    if (cfg.noise_uV > 0.0) {
        const auto& bank = noise_bank();
        for (int ch = 0; ch < kNumChannels; ++ch) {
            auto out = rec.channel(ch);
            std::size_t off = rng.below(kNoiseBankSize);
            const float scale = static_cast<float>(rng.bernoulli(0.5) ? cfg.noise_uV : -cfg.noise_uV);
            for (auto& x : out) {
                x = scale * bank[off];
                if (++off == kNoiseBankSize) off = 0;
            }
        }
    }

    const auto& tmpl = template_storage();
    const double reach2 = sq(cfg.spike_radius);
    const double spread2 = 2.0 * sq(cfg.spike_spread);
    rec.truth.spikes.reserve(spikes.size());
    for (const auto& s : spikes) {
        rec.truth.spikes.push_back({s.neuron, s.step * cfg.dt_ms});
        const auto& pos = c.positions[s.neuron];
        const int start = s.step * sps;
        const int r_lo = std::max(0, static_cast<int>(std::floor(pos.row - cfg.spike_radius)));
        const int r_hi = std::min(kGridSide - 1, static_cast<int>(std::ceil(pos.row + cfg.spike_radius)));
        const int c_lo = std::max(0, static_cast<int>(std::floor(pos.col - cfg.spike_radius)));
        const int c_hi = std::min(kGridSide - 1, static_cast<int>(std::ceil(pos.col + cfg.spike_radius)));
        for (int r = r_lo; r <= r_hi; ++r) {
            for (int col = c_lo; col <= c_hi; ++col) {
                const double d2 = dist2(pos, ElectrodeCoord{r, col});
                if (d2 > reach2) continue;
                const float gain = static_cast<float>(c.spike_amp_uV[s.neuron] * std::exp(-d2 / spread2));
                const int ch = r * kGridSide + col;
                auto out = rec.channel(ch);
                const int stop = std::min(rec.n_samples, start + kTemplateLen);
                for (int t = start; t < stop; ++t) out[t] += gain * tmpl[t - start];
                if (gain >= 1.0f && start + kTemplateTrough < rec.n_samples) {
                    rec.truth.rendered.push_back({ch, start + kTemplateTrough, gain, s.neuron});
                }
            }
        }
    }

    if (pattern != nullptr && pattern->waveform.amplitude_uA > 0.0) {
        const auto& art = cfg.artifact;
        std::vector<std::uint8_t> hit(kNumChannels, 0);
        for (auto e : pattern_electrodes(*pattern)) {
            for (int r = e.row - art.radius; r <= e.row + art.radius; ++r) {
                for (int col = e.col - art.radius; col <= e.col + art.radius; ++col) {
                    if (in_bounds({r, col})) hit[r * kGridSide + col] = 1;
                }
            }
        }
        const double noise_floor = std::max(cfg.noise_uV, 1.0);
        for (int ch = 0; ch < kNumChannels; ++ch) {
            if (!hit[ch]) continue;
            const bool high = rng.bernoulli(art.high_fraction);
            const double amp = high ? rng.uniform(art.high_min_uV, art.high_max_uV)
                                    : rng.uniform(art.long_min_uV, art.long_max_uV);
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            const double tau = (high ? art.high_tau_ms : art.long_tau_ms) * kSampleRateHz / 1000.0;
            const int len = static_cast<int>(std::ceil(tau * std::log(amp / 0.5)));
            auto out = rec.channel(ch);
            const int stop = std::min(rec.n_samples, stim_sample + len);
            for (int t = stim_sample; t < stop; ++t) {
                out[t] += static_cast<float>(sign * amp * std::exp(-(t - stim_sample) / tau));
            }
            const int visible = static_cast<int>(std::ceil(tau * std::log(amp / noise_floor)));
            rec.truth.artifacts.push_back({ch, stim_sample, std::min(rec.n_samples - 1, stim_sample + visible),
                                           static_cast<float>(sign * amp), high});
        }
    }
    return rec;
}

}  // namespace

std::span<const float> spike_template() { return template_storage(); }
int spike_template_trough() { return kTemplateTrough; }

std::vector<std::string> CultureConfig::validate() const {
    std::vector<std::string> out;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be > 0");
    };
    if (n_neurons < 2) out.push_back("n_neurons must be >= 2");
    if (!(frac_inhibitory >= 0.0 && frac_inhibitory <= 1.0)) out.push_back("frac_inhibitory must lie in [0,1]");
    positive(connect_sigma, "connect_sigma");
    positive(mean_out_degree, "mean_out_degree");
    if (mean_out_degree >= n_neurons) out.push_back("mean_out_degree must be < n_neurons");
    positive(membrane_tau_ms, "membrane_tau_ms");
    positive(refractory_ms, "refractory_ms");
    positive(dt_ms, "dt_ms");
    positive(post_ms, "post_ms");
    positive(spike_spread, "spike_spread");
    if (spont_rate_hz < 0.0) out.push_back("spont_rate_hz must be >= 0");
    if (noise_uV < 0.0) out.push_back("noise_uV must be >= 0");
    if (pre_ms < 0.0 || warmup_ms < 0.0) out.push_back("pre_ms and warmup_ms must be >= 0");
    if (threshold_mV <= reset_mV) out.push_back("threshold_mV must exceed reset_mV");
    const double sps = dt_ms * kSampleRateHz / 1000.0;
    if (std::abs(sps - std::round(sps)) > 1e-9 || std::round(sps) < 1) {
        out.push_back("dt_ms must be a whole number of 20 kHz samples");
    }
    return out;
}

double Culture::mean_out_degree() const {
    return positions.empty() ? 0.0 : static_cast<double>(syn.size()) / positions.size();
}

double Culture::connection_probability(int from, int to) const {
    if (from == to) return 0.0;
    const double d2 = dist2(positions[from], positions[to]);
    if (d2 > kernel_cutoff2(cfg)) return 0.0;
    return std::min(1.0, kernel_gain * kernel(cfg, d2));
}

std::vector<int> Culture::neurons_near(ElectrodeCoord e, double radius) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (dist2(positions[i], e) <= radius * radius) out.push_back(static_cast<int>(i));
    }
    return out;
}

Culture grow_culture(const CultureConfig& cfg) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError("culture config: " + v.front());

    Culture c;
    c.cfg = cfg;
    const int n = cfg.n_neurons;
    Rng rng(substream(cfg.seed, "grow"));

    c.positions.resize(n);
    c.inhibitory.resize(n);
    c.spike_amp_uV.resize(n);
    for (int i = 0; i < n; ++i) {
        c.positions[i] = {rng.uniform(-0.5, kGridSide - 0.5), rng.uniform(-0.5, kGridSide - 0.5)};
        c.inhibitory[i] = rng.bernoulli(cfg.frac_inhibitory) ? 1 : 0;
        c.spike_amp_uV[i] = static_cast<float>(rng.uniform(cfg.spike_amp_min_uV, cfg.spike_amp_max_uV));
    }

    // Calibrate p0 so the expected edge count is exactly n * mean_out_degree.
    const double cut2 = kernel_cutoff2(cfg);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d2 = dist2(c.positions[i], c.positions[j]);
            if (d2 <= cut2) mass += kernel(cfg, d2);
        }
    }
    c.kernel_gain = mass > 0.0 ? cfg.mean_out_degree * n / mass : 0.0;

    c.offsets.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        c.offsets[i] = static_cast<std::uint32_t>(c.syn.size());
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d2 = dist2(c.positions[i], c.positions[j]);
            if (d2 > cut2) continue;
            const double p = std::min(1.0, c.kernel_gain * kernel(cfg, d2));
            if (p > 0.0 && rng.bernoulli(p)) {
                c.syn.push_back({j, draw_weight(cfg, c.inhibitory[i] != 0, rng), delay_steps(cfg, c.inhibitory[i] != 0, std::sqrt(d2))});
            }
        }
    }
    c.offsets[n] = static_cast<std::uint32_t>(c.syn.size());
    return c;
}

Culture advance_day(const Culture& c, const DayDrift& drift) {
    if (!(drift.rewire_frac >= 0.0 && drift.rewire_frac <= 1.0)) {
        throw ConfigError("rewire fraction must lie in [0,1]");
    }
    if (drift.weight_jitter_cv < 0.0) throw ConfigError("weight jitter cv must be >= 0");

    Culture next = c;
    next.day_index = c.day_index + 1;
    Rng rng(substream(c.cfg.seed, "day", {static_cast<std::uint64_t>(next.day_index)}));
    const int n = static_cast<int>(c.positions.size());

    const double s2 = std::log1p(drift.weight_jitter_cv * drift.weight_jitter_cv);
    const double s = std::sqrt(s2);
    const double mu = -0.5 * s2;

    // Candidates within the kernel cutoff of each neuron, used for rejection
    // sampling of replacement targets.
    const double cut2 = kernel_cutoff2(c.cfg);
    for (int i = 0; i < n; ++i) {
        auto first = next.syn.begin() + next.offsets[i];
        auto last = next.syn.begin() + next.offsets[i + 1];
        if (first == last) continue;

        std::unordered_set<std::int32_t> taken;
        for (auto it = first; it != last; ++it) taken.insert(it->target);

        std::vector<std::int32_t> near;
        std::vector<double> near_k;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = dist2(c.positions[i], c.positions[j]);
            if (d2 <= cut2) {
                near.push_back(j);
                near_k.push_back(kernel(c.cfg, d2));
            }
        }

        for (auto it = first; it != last; ++it) {
            if (drift.rewire_frac > 0.0 && rng.bernoulli(drift.rewire_frac) &&
                taken.size() < near.size()) {
                std::int32_t target = -1;
                for (int tries = 0; tries < 100000 && target < 0; ++tries) {
                    const auto k = rng.below(near.size());
                    if (rng.uniform() < near_k[k] && !taken.contains(near[k])) target = near[k];
                }
                if (target < 0) {
                    // Kernel mass is negligible everywhere untaken: take the closest free slot.
                    double best = -1.0;
                    for (std::size_t k = 0; k < near.size(); ++k) {
                        if (!taken.contains(near[k]) && near_k[k] > best) {
                            best = near_k[k];
                            target = near[k];
                        }
                    }
                }
                taken.erase(it->target);
                taken.insert(target);
                const double d = std::sqrt(dist2(c.positions[i], c.positions[target]));
                *it = {target, draw_weight(c.cfg, c.inhibitory[i] != 0, rng), delay_steps(c.cfg, c.inhibitory[i] != 0, d)};
            } else if (s > 0.0) {
                it->weight = static_cast<float>(it->weight * std::exp(rng.normal(mu, s)));
            }
        }
    }
    return next;
}

RawRecording spontaneous_window(const Culture& c, double duration_ms, std::uint64_t seed) {
    if (!(duration_ms > 0.0)) throw ConfigError("spontaneous window duration must be > 0");
    Rng rng(seed);
    const int steps = static_cast<int>(std::lround(duration_ms / c.cfg.dt_ms));
    const auto spikes = simulate(c, steps, 0, {}, rng);
    auto rec = render(c, steps, 0, spikes, nullptr, rng);
    rec.label = "spontaneous";
    return rec;
}

RawRecording stimulate(const Culture& c, const StimPattern& p, double pre_ms, double post_ms,
                       std::uint64_t seed) {
    if (auto v = validate_pattern_structure(p); !v.empty()) {
        for (const auto& msg : v) {
            if (msg.starts_with("out of bounds")) throw BoundsError("stimulate: " + msg);
        }
        throw ConfigError("stimulate: invalid pattern: " + v.front());
    }
    if (pre_ms < 0.0 || !(post_ms > 0.0)) throw ConfigError("stimulate: window lengths must be positive");
    Rng rng(seed);
    const int pre_steps = static_cast<int>(std::lround(pre_ms / c.cfg.dt_ms));
    const int post_steps = static_cast<int>(std::lround(post_ms / c.cfg.dt_ms));
    const auto kicks = stimulation_kicks(c, p);
    const auto spikes = simulate(c, pre_steps + post_steps, pre_steps, kicks, rng);
    auto rec = render(c, pre_steps + post_steps, pre_steps * samples_per_step(c.cfg), spikes, &p, rng);
    rec.label = p.label;
    rec.meta.has_stimulus = true;
    return rec;
}

RawRecording stimulate(const Culture& c, const StimPattern& p, std::uint64_t seed) {
    return stimulate(c, p, c.cfg.pre_ms, c.cfg.post_ms, seed);
}

}  // namespace brc
