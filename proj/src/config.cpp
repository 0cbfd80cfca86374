#include "brc/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <type_traits>

#include "brc/errors.hpp"

namespace brc {

namespace {

using json = nlohmann::json;

// Each section lists its fields once; the same list drives both directions.
template <class F>
void fields(ArtifactConfig& a, F&& f) {
    f("radius", a.radius);
    f("high_fraction", a.high_fraction);
    f("high_min_uV", a.high_min_uV);
    f("high_max_uV", a.high_max_uV);
    f("high_tau_ms", a.high_tau_ms);
    f("long_min_uV", a.long_min_uV);
    f("long_max_uV", a.long_max_uV);
    f("long_tau_ms", a.long_tau_ms);
}

template <class F>
void fields(CultureConfig& c, F&& f) {
    f("n_neurons", c.n_neurons);
    f("frac_inhibitory", c.frac_inhibitory);
    f("connect_sigma", c.connect_sigma);
    f("mean_out_degree", c.mean_out_degree);
    f("syn_weight_mean", c.syn_weight_mean);
    f("syn_weight_std", c.syn_weight_std);
    f("inhibitory_scale", c.inhibitory_scale);
    f("delay_base_ms", c.delay_base_ms);
    f("delay_per_pitch_ms", c.delay_per_pitch_ms);
    f("inh_delay_extra_ms", c.inh_delay_extra_ms);
    f("membrane_tau_ms", c.membrane_tau_ms);
    f("refractory_ms", c.refractory_ms);
    f("threshold_mV", c.threshold_mV);
    f("reset_mV", c.reset_mV);
    f("rest_mV", c.rest_mV);
    f("spont_rate_hz", c.spont_rate_hz);
    f("spont_kick_mV", c.spont_kick_mV);
    f("coupling_radius", c.coupling_radius);
    f("stim_gain_mV_per_pC", c.stim_gain_mV_per_pC);
    f("stim_latency_ms", c.stim_latency_ms);
    f("spike_amp_min_uV", c.spike_amp_min_uV);
    f("spike_amp_max_uV", c.spike_amp_max_uV);
    f("spike_spread", c.spike_spread);
    f("spike_radius", c.spike_radius);
    f("noise_uV", c.noise_uV);
    f("artifact", c.artifact);
    f("dt_ms", c.dt_ms);
    f("warmup_ms", c.warmup_ms);
    f("pre_ms", c.pre_ms);
    f("post_ms", c.post_ms);
    f("seed", c.seed);
}

template <class F>
void fields(DayDrift& d, F&& f) {
    f("rewire_frac", d.rewire_frac);
    f("weight_jitter_cv", d.weight_jitter_cv);
}

template <class F>
void fields(DetectorConfig& d, F&& f) {
    f("thr_l", d.thr_l);
    f("thr_h", d.thr_h);
    f("w_s_ms", d.w_s_ms);
    f("snippet_ms", d.snippet_ms);
    f("refractory_ms", d.refractory_ms);
}

template <class F>
void fields(ArtifactFilter& a, F&& f) {
    f("v_thr_uV", a.v_thr_uV);
    f("w_thr", a.w_thr);
}

template <class F>
void fields(TrainConfig& t, F&& f) {
    f("epochs", t.epochs);
    f("lr0", t.lr0);
    f("lr_decay_epochs", t.lr_decay_epochs);
    f("batch_size", t.batch_size);
    f("standardize", t.standardize);
}

template <class F>
void fields(EsnConfig& e, F&& f) {
    f("n_units", e.n_units);
    f("sparsity", e.sparsity);
    f("rho", e.rho);
    f("input_gain", e.input_gain);
    f("leak", e.leak);
    f("steps", e.steps);
    f("noise_scale", e.noise_scale);
    f("seed", e.seed);
}

template <class F>
void fields(ProtocolConfig& p, F&& f) {
    f("repetitions", p.repetitions);
    f("mnist_repetitions", p.mnist_repetitions);
    f("isi_s", p.isi_s);
    f("n_replicates", p.n_replicates);
    f("n_days", p.n_days);
    f("W_ms", p.W_ms);
    f("W_ms_mnist", p.W_ms_mnist);
    f("W_list", p.W_list);
    f("k_folds", p.k_folds);
    f("mask_margin", p.mask_margin);
    f("noise_windows", p.noise_windows);
    f("seed", p.seed);
}

template <class F>
void fields(ClockGeometry& g, F&& f) {
    f("origin", g.origin);
    f("segment_length", g.segment_length);
}

template <class F>
void fields(PatternConfig& p, F&& f) {
    f("point_centers", p.point_centers);
    f("point_waveform", p.point_waveform);
    f("bar_center", p.bar_center);
    f("bar_pairs", p.bar_pairs);
    f("bar_dilation", p.bar_dilation);
    f("bar_waveform", p.bar_waveform);
    f("clock", p.clock);
    f("clock_waveform", p.clock_waveform);
    f("mnist_images", p.mnist_images);
    f("mnist_labels", p.mnist_labels);
    f("mnist_subset", p.mnist_subset);
    f("mnist_resolution", p.mnist_resolution);
    f("mnist_origin", p.mnist_origin);
    f("mnist_waveform", p.mnist_waveform);
}

template <class F>
void fields(WorkbenchConfig& w, F&& f) {
    f("culture", w.culture);
    f("drift", w.drift);
    f("detector", w.detector);
    f("filter", w.filter);
    f("readout", w.readout);
    f("esn", w.esn);
    f("protocol", w.protocol);
    f("patterns", w.patterns);
}

template <class T>
concept Section = requires(T& t) { fields(t, [](const char*, auto&) {}); };

json put(double v) { return v; }
json put(int v) { return v; }
json put(bool v) { return v; }
json put(std::uint64_t v) { return v; }
json put(const ElectrodeCoord& c) { return json::array({c.row, c.col}); }
json put(const Waveform& w) {
    return {{"shape", to_string(w.shape)},
            {"amplitude_uA", w.amplitude_uA},
            {"delta_plus_us", w.delta_plus_us},
            {"delta_minus_us", w.delta_minus_us}};
}
json put(const std::filesystem::path& p) { return p.string(); }
template <class T>
json put(const std::vector<T>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(put(x));
    return a;
}

template <Section T>
json put(const T& s) {
    json j = json::object();
    fields(const_cast<T&>(s), [&](const char* key, const auto& v) { j[key] = put(v); });
    return j;
}

[[noreturn]] void bad(const std::string& path, const std::string& why) {
    throw ConfigError("config key '" + path + "': " + why);
}

void get(const json& j, const std::string& path, double& v) {
    if (!j.is_number()) bad(path, "expected a number");
    v = j.get<double>();
}
void get(const json& j, const std::string& path, int& v) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    v = j.get<int>();
}
void get(const json& j, const std::string& path, std::uint64_t& v) {
    if (!j.is_number_unsigned()) bad(path, "expected a non-negative integer");
    v = j.get<std::uint64_t>();
}
void get(const json& j, const std::string& path, bool& v) {
    if (!j.is_boolean()) bad(path, "expected true or false");
    v = j.get<bool>();
}
void get(const json& j, const std::string& path, std::filesystem::path& v) {
    if (!j.is_string()) bad(path, "expected a path string");
    v = j.get<std::string>();
}
void get(const json& j, const std::string& path, ElectrodeCoord& c) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        bad(path, "expected [row, col]");
    }
    c = {j[0].get<int>(), j[1].get<int>()};
}
void get(const json& j, const std::string& path, Waveform& w) {
    if (!j.is_object()) bad(path, "expected a waveform object");
    for (const auto& [k, _] : j.items()) {
        if (k != "shape" && k != "amplitude_uA" && k != "delta_plus_us" && k != "delta_minus_us") {
            bad(path + "." + k, "unknown key");
        }
    }
    if (j.contains("shape")) {
        if (!j["shape"].is_string()) bad(path + ".shape", "expected a string");
        try {
            w.shape = wave_shape_from_string(j["shape"].get<std::string>());
        } catch (const Error& e) {
            bad(path + ".shape", e.what());
        }
    }
    if (j.contains("amplitude_uA")) get(j["amplitude_uA"], path + ".amplitude_uA", w.amplitude_uA);
    if (j.contains("delta_plus_us")) get(j["delta_plus_us"], path + ".delta_plus_us", w.delta_plus_us);
    if (j.contains("delta_minus_us")) get(j["delta_minus_us"], path + ".delta_minus_us", w.delta_minus_us);
}
template <class T>
void get(const json& j, const std::string& path, std::vector<T>& v) {
    if (!j.is_array()) bad(path, "expected an array");
    v.assign(j.size(), T{});
    for (std::size_t i = 0; i < j.size(); ++i) get(j[i], path + "[" + std::to_string(i) + "]", v[i]);
}

template <Section T>
void get(const json& j, const std::string& path, T& s) {
    if (!j.is_object()) bad(path, "expected an object");
    std::set<std::string> known;
    fields(s, [&](const char* key, auto& v) {
        known.insert(key);
        if (j.contains(key)) get(j.at(key), path.empty() ? key : path + "." + key, v);
    });
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) bad(path.empty() ? k : path + "." + k, "unknown key");
    }
}

void prefix(std::vector<std::string>& out, const std::string& section, const std::vector<std::string>& msgs) {
    for (const auto& m : msgs) out.push_back(section + ": " + m);
}

}  // namespace

std::vector<std::string> ProtocolConfig::validate() const {
    std::vector<std::string> out;
    if (repetitions < 20) out.push_back("repetitions must be >= 20");
    if (mnist_repetitions < 1) out.push_back("mnist_repetitions must be >= 1");
    if (!(isi_s > 0.0)) out.push_back("isi_s must be > 0");
    if (n_replicates < 1) out.push_back("n_replicates must be >= 1");
    if (n_days < 1) out.push_back("n_days must be >= 1");
    if (!(W_ms > 0.0) || !(W_ms_mnist > 0.0)) out.push_back("W must be > 0");
    for (double w : W_list) {
        if (!(w > 0.0)) out.push_back("W_list entries must be > 0");
    }
    if (k_folds < 2) out.push_back("k_folds must be >= 2");
    if (mask_margin < 0) out.push_back("mask_margin must be >= 0");
    if (noise_windows < 21) out.push_back("noise_windows must be > 20");
    return out;
}

std::vector<std::string> WorkbenchConfig::validate() const {
    std::vector<std::string> out;
    prefix(out, "culture", culture.validate());
    if (drift.rewire_frac < 0.0 || drift.rewire_frac > 1.0) out.push_back("drift: rewire_frac must lie in [0,1]");
    if (drift.weight_jitter_cv < 0.0) out.push_back("drift: weight_jitter_cv must be >= 0");
    prefix(out, "detector", detector.validate());
    if (!(filter.v_thr_uV > 0.0) || !(filter.w_thr > 0.0)) out.push_back("filter: thresholds must be > 0");
    prefix(out, "readout", readout.validate());
    prefix(out, "esn", esn.validate());
    prefix(out, "protocol", protocol.validate());
    prefix(out, "patterns", patterns.clock.validate());
    if (patterns.point_centers.empty()) out.push_back("patterns: point_centers is empty");
    if (patterns.mnist_subset < 1) out.push_back("patterns: mnist_subset must be >= 1");
    if (patterns.mnist_resolution < 1 || patterns.mnist_resolution > 28) {
        out.push_back("patterns: mnist_resolution must lie in [1, 28]");
    }
    if (patterns.bar_pairs < 1 || patterns.bar_dilation < 0) out.push_back("patterns: bad bar geometry");
    double max_W = std::max(protocol.W_ms, protocol.W_ms_mnist);
    for (double w : protocol.W_list) max_W = std::max(max_W, w);
    if (max_W > culture.post_ms) out.push_back("protocol: a window W exceeds culture.post_ms");
    return out;
}

nlohmann::json to_json(const WorkbenchConfig& cfg) { return put(cfg); }

WorkbenchConfig config_from_json(const nlohmann::json& j) {
    WorkbenchConfig cfg;
    get(j, "", cfg);
    return cfg;
}

WorkbenchConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto cfg = config_from_json(j);
    // Relative data paths are taken relative to the config file.
    const auto base = path.parent_path();
    for (auto* p : {&cfg.patterns.mnist_images, &cfg.patterns.mnist_labels}) {
        if (!p->empty() && p->is_relative()) *p = base / *p;
    }
    return cfg;
}

void save_config(const WorkbenchConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace brc
