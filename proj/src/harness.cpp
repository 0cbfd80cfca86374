#include "brc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

#include "brc/errors.hpp"
#include "brc/parallel.hpp"
#include "brc/rng.hpp"

namespace brc {

namespace {

constexpr const char* kFamilyNames[] = {"pointwise", "bars", "clock", "mnist"};
constexpr const char* kSubstrateNames[] = {"culture", "ar", "both"};

bool uses_culture(Substrate s) { return s != Substrate::ar; }
bool uses_ar(Substrate s) { return s != Substrate::culture; }

int post_samples_needed(double W_ms) { return window_samples(W_ms); }

// Re-throws the active brc error as the same type with a context prefix.
[[noreturn]] void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const BoundsError& e) {
        throw BoundsError(ctx + e.what());
    } catch (const FormatError& e) {
        throw FormatError(ctx + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const NumericError& e) {
        throw NumericError(ctx + e.what());
    } catch (const DataError& e) {
        throw DataError(ctx + e.what());
    } catch (const TrainingError& e) {
        throw TrainingError(ctx + e.what());
    } catch (const Error& e) {
        throw ProtocolError(ctx + e.what());
    }
}

void check_window(const SessionData& s, double W_ms) {
    for (std::size_t i = 0; i < s.t_stim.size(); ++i) {
        if (s.t_stim[i] + post_samples_needed(W_ms) > s.n_samples[i] - 1) {
            throw ProtocolError("window W = " + std::to_string(W_ms) +
                                " ms exceeds the recorded post-stimulus window of session " +
                                std::to_string(s.session));
        }
    }
}

}  // namespace

std::string to_string(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family family_from_string(const std::string& s) {
    for (int i = 0; i < 4; ++i) {
        if (s == kFamilyNames[i]) return static_cast<Family>(i);
    }
    throw ConfigError("unknown family '" + s + "' (pointwise, bars, clock, mnist)");
}

std::string to_string(Substrate s) { return kSubstrateNames[static_cast<int>(s)]; }

Substrate substrate_from_string(const std::string& s) {
    for (int i = 0; i < 3; ++i) {
        if (s == kSubstrateNames[i]) return static_cast<Substrate>(i);
    }
    throw ConfigError("unknown substrate '" + s + "' (culture, ar, both)");
}

StimPattern FamilyStimuli::pattern(std::size_t item, std::uint64_t delivery_seed) const {
    if (item >= n_items()) throw BoundsError("stimulus item " + std::to_string(item) + " out of range");
    if (family != Family::mnist) return fixed[item];
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        auto p = map_mnist(images[item], mapping, mnist_waveform, substream(delivery_seed, "mnist-draw", {attempt}));
        if (!p.pairs.empty()) return p;
    }
    throw DataError("MNIST image " + std::to_string(item) + " produced no stimulation pairs in 1000 draws");
}

FamilyStimuli make_family(Family f, const WorkbenchConfig& cfg) {
    const auto& pc = cfg.patterns;
    FamilyStimuli s;
    s.family = f;
    auto add_fixed = [&](StimPattern p) {
        s.item_class.push_back(static_cast<int>(s.class_names.size()));
        s.class_names.push_back(p.label);
        s.fixed.push_back(std::move(p));
    };
    switch (f) {
        case Family::pointwise:
            for (std::size_t i = 0; i < pc.point_centers.size(); ++i) {
                add_fixed(make_pointwise(pc.point_centers[i], pc.point_waveform, "p" + std::to_string(i + 1)));
            }
            break;
        case Family::bars:
            for (int deg : {0, 45, 90, 135}) {
                add_fixed(make_bar(deg, pc.bar_center, pc.bar_waveform, pc.bar_pairs, pc.bar_dilation,
                                   std::to_string(deg) + "deg"));
            }
            break;
        case Family::clock:
            for (int d = 0; d < 10; ++d) add_fixed(make_clock_digit(d, pc.clock, pc.clock_waveform));
            break;
        case Family::mnist: {
            if (pc.mnist_images.empty() || pc.mnist_labels.empty()) {
                throw ConfigError("mnist family needs patterns.mnist_images and patterns.mnist_labels");
            }
            const auto all = load_mnist_idx(pc.mnist_images, pc.mnist_labels);
            s.images = sample_subset(all, static_cast<std::size_t>(pc.mnist_subset),
                                     substream(cfg.protocol.seed, "mnist-subset"));
            for (int d = 0; d < 10; ++d) s.class_names.push_back(std::to_string(d));
            for (const auto& img : s.images) s.item_class.push_back(img.label);
            s.mapping.target_res = pc.mnist_resolution;
            s.mapping.region_origin = pc.mnist_origin;
            s.mnist_waveform = pc.mnist_waveform;
            break;
        }
    }
    for (const auto& p : s.fixed) {
        if (auto v = validate_pattern(p); !v.empty()) throw ConfigError(p.label + ": " + v.front());
    }
    return s;
}

int repetitions_for(Family f, const ProtocolConfig& p) {
    return f == Family::mnist ? p.mnist_repetitions : p.repetitions;
}

double window_for(Family f, const ProtocolConfig& p) { return f == Family::mnist ? p.W_ms_mnist : p.W_ms; }

std::vector<Delivery> delivery_order(std::size_t n_items, int repetitions, std::uint64_t seed) {
    std::vector<Delivery> order;
    order.reserve(n_items * static_cast<std::size_t>(std::max(0, repetitions)));
    for (int r = 0; r < repetitions; ++r) {
        for (std::size_t i = 0; i < n_items; ++i) order.push_back({i, r});
    }
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

std::uint64_t session_seed(std::uint64_t root, int replicate, int day) {
    return substream(root, "session",
                     {static_cast<std::uint64_t>(replicate), static_cast<std::uint64_t>(day)});
}

CultureConfig replicate_culture_config(const WorkbenchConfig& cfg, int replicate) {
    CultureConfig c = cfg.culture;
    c.seed = substream(cfg.protocol.seed, "culture", {cfg.culture.seed, static_cast<std::uint64_t>(replicate)});
    return c;
}

EsnConfig replicate_esn_config(const WorkbenchConfig& cfg, int replicate) {
    EsnConfig e = cfg.esn;
    e.seed = substream(cfg.protocol.seed, "esn", {cfg.esn.seed, static_cast<std::uint64_t>(replicate)});
    return e;
}

std::vector<ReservoirState> SessionData::states(double W_ms) const {
    check_window(*this, W_ms);
    std::vector<ReservoirState> out;
    out.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto st = extract_state(events[i], t_stim[i], W_ms, masks[i]);
        st.label = class_names[static_cast<std::size_t>(labels[i])];
        st.meta.replicate = replicate;
        st.meta.day = day;
        st.meta.session = session;
        st.meta.stimulus_index = static_cast<int>(i);
        out.push_back(std::move(st));
    }
    return out;
}

LabeledDataset SessionData::dataset(double W_ms) const {
    LabeledDataset ds;
    ds.class_names = class_names;
    for (auto& st : states(W_ms)) {
        ds.features.emplace_back(st.counts.begin(), st.counts.end());
        ds.meta.push_back(st.meta);
    }
    ds.labels = labels;
    return ds;
}

SessionData plan_session(const FamilyStimuli& stim, const WorkbenchConfig& cfg, SessionKey key,
                         std::uint64_t seed) {
    SessionData s;
    s.replicate = key.replicate;
    s.day = key.day;
    s.session = key.session;
    s.seed = seed;
    s.isi_s = cfg.protocol.isi_s;
    s.class_names = stim.class_names;
    s.order = delivery_order(stim.n_items(), repetitions_for(stim.family, cfg.protocol), substream(seed, "order"));
    s.patterns.reserve(s.order.size());
    for (std::size_t i = 0; i < s.order.size(); ++i) {
        s.patterns.push_back(stim.pattern(s.order[i].item, substream(seed, "delivery", {i})));
        s.labels.push_back(stim.item_class[s.order[i].item]);
    }
    return s;
}

SessionData run_session(const Culture& culture, const FamilyStimuli& stim, const WorkbenchConfig& cfg,
                        SessionKey key, std::uint64_t seed, int jobs) {
    SessionData s = plan_session(stim, cfg, key, seed);
    const std::size_t n = s.order.size();
    s.events.resize(n);
    s.rejected.resize(n);
    s.t_stim.resize(n);
    s.n_samples.resize(n);
    s.masks.resize(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        try {
            const auto rec = stimulate(culture, s.patterns[i], substream(seed, "stim", {i}));
            auto det = process_recording(rec, cfg.detector, cfg.filter, false);
            auto& kept = det.events.kept;
            std::erase_if(kept, [&](const SpikeEvent& e) { return e.t_sample < rec.t_stim_sample; });
            kept.shrink_to_fit();
            s.events[i] = std::move(kept);
            s.rejected[i] = det.events.rejected.size();
            s.t_stim[i] = rec.t_stim_sample;
            s.n_samples[i] = rec.n_samples;
            s.masks[i] = stim_mask(s.patterns[i], cfg.protocol.mask_margin);
        } catch (const Error&) {
            rethrow_with_context("session " + std::to_string(key.session) + ", stimulus " + std::to_string(i) + ": ");
        }
    });
    return s;
}

NoiseModel culture_noise_model(const Culture& culture, const WorkbenchConfig& cfg, double W_ms,
                               std::uint64_t seed) {
    // Pad each window so the detector's edge handling stays out of the count.
    constexpr double pad_ms = 5.0;
    const int n = cfg.protocol.noise_windows;
    std::vector<std::vector<std::int32_t>> windows(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto rec = spontaneous_window(culture, W_ms + 2 * pad_ms, substream(seed, "window", {static_cast<std::uint64_t>(j)}));
        const auto det = process_recording(rec, cfg.detector, cfg.filter, false);
        const auto st = extract_state(det.events.kept, window_samples(pad_ms), W_ms, ChannelMask{});
        windows[static_cast<std::size_t>(j)] = st.counts;
    }
    return estimate_noise(windows);
}

LabeledDataset run_ar_session(const EsnReservoir& esn, const Culture& culture, const SessionData& session,
                              const WorkbenchConfig& cfg, double W_ms) {
    const auto noise = culture_noise_model(culture, cfg, W_ms, substream(session.seed, "noise"));
    LabeledDataset ds;
    ds.class_names = session.class_names;
    ds.labels = session.labels;
    ds.features.resize(session.patterns.size());
    for (std::size_t i = 0; i < session.patterns.size(); ++i) {
        ds.features[i] = ar_state(esn, session.patterns[i], noise, substream(session.seed, "ar", {i}));
        StateMeta m;
        m.W_ms = W_ms;
        m.replicate = session.replicate;
        m.day = session.day;
        m.session = session.session;
        m.stimulus_index = static_cast<int>(i);
        ds.meta.push_back(m);
    }
    return ds;
}

Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (s.n - 1));
        s.sem = s.std / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

Summary ExperimentReport::overall(const std::string& substrate) const {
    std::vector<double> xs;
    for (const auto& r : sessions) {
        if (r.substrate == substrate) xs.push_back(r.cv.mean);
    }
    return summarize(xs);
}

Summary ExperimentReport::day(const std::string& substrate, int d) const {
    std::vector<double> xs;
    for (const auto& r : sessions) {
        if (r.substrate == substrate && r.key.day == d) xs.push_back(r.cv.mean);
    }
    return summarize(xs);
}

std::vector<Summary> ExperimentReport::per_class(const std::string& substrate) const {
    std::vector<Summary> out;
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        std::vector<double> xs;
        for (const auto& r : sessions) {
            if (r.substrate == substrate && c < r.cv.per_class_count.size() && r.cv.per_class_count[c] > 0) {
                xs.push_back(r.cv.per_class_accuracy[c]);
            }
        }
        out.push_back(summarize(xs));
    }
    return out;
}

RunOutput run_family(Family f, const WorkbenchConfig& cfg, const RunOptions& opt) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError(v.front());
    const auto t0 = std::chrono::steady_clock::now();
    const auto& pr = cfg.protocol;
    const auto stim = make_family(f, cfg);
    const double W = window_for(f, pr);

    RunOutput out;
    auto& rep = out.report;
    rep.family = f;
    rep.class_names = stim.class_names;
    rep.W_ms = W;
    rep.seed = pr.seed;
    rep.id = to_string(f) + "-" + to_string(opt.substrate) + "-seed" + std::to_string(pr.seed);

    for (int r = 1; r <= pr.n_replicates; ++r) {
        Culture culture = grow_culture(replicate_culture_config(cfg, r));
        std::optional<EsnReservoir> esn;
        if (uses_ar(opt.substrate)) esn = init_esn(replicate_esn_config(cfg, r));
        for (int d = 1; d <= pr.n_days; ++d) {
            if (d > 1) culture = advance_day(culture, cfg.drift);
            const SessionKey key{r, d, (r - 1) * pr.n_days + d};
            const auto seed = session_seed(pr.seed, r, d);
            SessionData sd = uses_culture(opt.substrate) ? run_session(culture, stim, cfg, key, seed, opt.jobs)
                                                         : plan_session(stim, cfg, key, seed);
            if (uses_culture(opt.substrate)) {
                const auto ds = sd.dataset(W);
                rep.sessions.push_back({key, "culture", cross_validate(ds, pr.k_folds, cfg.readout, substream(seed, "cv"), opt.jobs)});
                if (opt.shuffle) {
                    const auto sh = shuffle_baseline(ds, substream(seed, "shuffle"));
                    rep.sessions.push_back({key, "shuffle", cross_validate(sh, pr.k_folds, cfg.readout, substream(seed, "cv"), opt.jobs)});
                }
            }
            if (esn) {
                auto ds = run_ar_session(*esn, culture, sd, cfg, W);
                rep.sessions.push_back({key, "ar", cross_validate(ds, pr.k_folds, cfg.readout, substream(seed, "cv"), opt.jobs)});
                out.ar_states.push_back(std::move(ds));
            }
            out.sessions.push_back(std::move(sd));
        }
    }
    rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<SessionData> simulate_sessions(Family f, const WorkbenchConfig& cfg, int jobs) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError(v.front());
    const auto& pr = cfg.protocol;
    const auto stim = make_family(f, cfg);
    std::vector<SessionData> out;
    for (int r = 1; r <= pr.n_replicates; ++r) {
        Culture culture = grow_culture(replicate_culture_config(cfg, r));
        for (int d = 1; d <= pr.n_days; ++d) {
            if (d > 1) culture = advance_day(culture, cfg.drift);
            const SessionKey key{r, d, (r - 1) * pr.n_days + d};
            out.push_back(run_session(culture, stim, cfg, key, session_seed(pr.seed, r, d), jobs));
        }
    }
    return out;
}

std::vector<WindowPoint> ablate_window(const std::vector<SessionData>& sessions, const WorkbenchConfig& cfg,
                                       const std::vector<double>& W_list, int jobs) {
    if (W_list.empty()) throw ConfigError("ablate_window needs at least one W");
    for (double W : W_list) {
        if (!(W > 0.0)) throw ConfigError("window W must be > 0");
        for (const auto& s : sessions) check_window(s, W);
    }
    std::vector<WindowPoint> curve;
    for (double W : W_list) {
        WindowPoint pt;
        pt.W_ms = W;
        for (const auto& s : sessions) {
            const auto cv = cross_validate(s.dataset(W), cfg.protocol.k_folds, cfg.readout, substream(s.seed, "cv"), jobs);
            pt.session_accuracy.push_back(cv.mean);
        }
        pt.accuracy = summarize(pt.session_accuracy);
        curve.push_back(std::move(pt));
    }
    return curve;
}

ExperimentReport ablate_window(Family f, const WorkbenchConfig& cfg, const std::vector<double>& W_list, int jobs) {
    for (double W : W_list) {
        if (W > cfg.culture.post_ms) {
            throw ProtocolError("window W = " + std::to_string(W) + " ms exceeds the recorded post-stimulus window of " +
                                std::to_string(cfg.culture.post_ms) + " ms");
        }
    }
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.family = f;
    rep.class_names = make_family(f, cfg).class_names;
    rep.W_ms = window_for(f, cfg.protocol);
    rep.seed = cfg.protocol.seed;
    rep.id = to_string(f) + "-ablate-window-seed" + std::to_string(rep.seed);
    const auto sessions = simulate_sessions(f, cfg, jobs);
    rep.window_curve = ablate_window(sessions, cfg, W_list, jobs);
    rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<CrossDayRow> cross_day_rows(const std::vector<SessionData>& sessions, const WorkbenchConfig& cfg,
                                        double W_ms, int jobs, double* within_day1) {
    int max_day = 0;
    for (const auto& s : sessions) max_day = std::max(max_day, s.day);
    if (max_day < 2) throw ProtocolError("cross-day evaluation needs at least two days of sessions");

    LabeledDataset train, train_sh;
    std::vector<double> day1_cv;
    for (const auto& s : sessions) {
        if (s.day != 1) continue;
        const auto ds = s.dataset(W_ms);
        if (train.class_names.empty()) {
            train.class_names = ds.class_names;
            train_sh.class_names = ds.class_names;
        }
        train.append(ds);
        train_sh.append(shuffle_baseline(ds, substream(s.seed, "shuffle")));
        if (within_day1) {
            day1_cv.push_back(cross_validate(ds, cfg.protocol.k_folds, cfg.readout, substream(s.seed, "cv"), jobs).mean);
        }
    }
    if (train.size() == 0) throw ProtocolError("no day-1 sessions to train on");
    if (within_day1) *within_day1 = summarize(day1_cv).mean;

    const auto model = train_slp(train, cfg.readout, substream(cfg.protocol.seed, "cross-day"));
    const auto model_sh = train_slp(train_sh, cfg.readout, substream(cfg.protocol.seed, "cross-day-shuffle"));

    std::vector<CrossDayRow> rows;
    for (int d = 2; d <= max_day; ++d) {
        CrossDayRow real{d, "culture", {}, {}};
        CrossDayRow shuf{d, "shuffle", {}, {}};
        for (const auto& s : sessions) {
            if (s.day != d) continue;
            const auto ds = s.dataset(W_ms);
            real.session_accuracy.push_back(evaluate(model, ds).mean);
            shuf.session_accuracy.push_back(evaluate(model_sh, shuffle_baseline(ds, substream(s.seed, "shuffle"))).mean);
        }
        real.accuracy = summarize(real.session_accuracy);
        shuf.accuracy = summarize(shuf.session_accuracy);
        rows.push_back(std::move(real));
        rows.push_back(std::move(shuf));
    }
    return rows;
}

ExperimentReport cross_day_eval(Family f, const WorkbenchConfig& cfg, int jobs) {
    if (cfg.protocol.n_days < 2) throw ProtocolError("cross-day evaluation needs n_days >= 2");
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.family = f;
    rep.class_names = make_family(f, cfg).class_names;
    rep.W_ms = window_for(f, cfg.protocol);
    rep.seed = cfg.protocol.seed;
    rep.id = to_string(f) + "-cross-day-seed" + std::to_string(rep.seed);
    const auto sessions = simulate_sessions(f, cfg, jobs);
    rep.cross_day = cross_day_rows(sessions, cfg, rep.W_ms, jobs, &rep.within_day1);
    rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace brc
