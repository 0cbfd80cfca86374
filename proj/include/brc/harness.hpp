#pragma once

// Experiment orchestration: sessions of randomized stimulus deliveries over
// replicate cultures and days, the four experiment families on the culture
// and artificial substrates, window ablation, cross-day transfer and the
// spatial-shuffle control.

#include <cstdint>
#include <string>
#include <vector>

#include "brc/ar.hpp"
#include "brc/config.hpp"
#include "brc/culture.hpp"
#include "brc/dsp.hpp"
#include "brc/readout.hpp"

namespace brc {

enum class Family { pointwise, bars, clock, mnist };
enum class Substrate { culture, ar, both };

std::string to_string(Family f);
Family family_from_string(const std::string& s);
std::string to_string(Substrate s);
Substrate substrate_from_string(const std::string& s);

/// The symbols of one family. For MNIST each item is an image and the
/// concrete pattern is drawn per delivery; the other families have one fixed
/// pattern per item.
struct FamilyStimuli {
    Family family = Family::pointwise;
    std::vector<std::string> class_names;
    std::vector<int> item_class;
    std::vector<StimPattern> fixed;      // pointwise, bars, clock
    std::vector<MnistImage> images;      // mnist
    MnistMapping mapping;
    Waveform mnist_waveform;

    std::size_t n_items() const { return item_class.size(); }
    /// Pattern for one delivery. MNIST draws that come out empty are redrawn
    /// from the next substream.
    StimPattern pattern(std::size_t item, std::uint64_t delivery_seed) const;
};

FamilyStimuli make_family(Family f, const WorkbenchConfig& cfg);

int repetitions_for(Family f, const ProtocolConfig& p);
double window_for(Family f, const ProtocolConfig& p);

struct Delivery {
    std::size_t item = 0;
    int repetition = 0;
};

/// `repetitions` copies of every item, shuffled with the seeded generator.
std::vector<Delivery> delivery_order(std::size_t n_items, int repetitions, std::uint64_t seed);

/// One stimulation session. Detector output is kept per delivery so states
/// can be re-extracted at any window without re-simulating.
struct SessionData {
    int replicate = 0;
    int day = 0;
    int session = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;
    std::vector<Delivery> order;
    std::vector<StimPattern> patterns;        // in delivery order
    std::vector<int> labels;
    // Artifact-filtered events at or after stimulus onset, without snippets.
    std::vector<std::vector<SpikeEvent>> events;
    std::vector<std::size_t> rejected;        // artifact events removed per delivery
    std::vector<int> t_stim;
    std::vector<int> n_samples;
    std::vector<ChannelMask> masks;
    double isi_s = 10.0;

    std::vector<ReservoirState> states(double W_ms) const;
    LabeledDataset dataset(double W_ms) const;
};

struct SessionKey {
    int replicate = 0;
    int day = 0;
    int session = 0;
};

/// Replicate and day numbers are 1-based throughout reports and exports.
std::uint64_t session_seed(std::uint64_t root, int replicate, int day);

/// Culture parameters of one biological replicate (seed derived from the
/// protocol root seed).
CultureConfig replicate_culture_config(const WorkbenchConfig& cfg, int replicate);
EsnConfig replicate_esn_config(const WorkbenchConfig& cfg, int replicate);

/// Delivery order and concrete patterns of a session, without stimulating.
SessionData plan_session(const FamilyStimuli& stim, const WorkbenchConfig& cfg, SessionKey key,
                         std::uint64_t seed);

/// Delivers every pattern of the session to the culture: stimulate, detect,
/// remove artifacts, keep events. Deliveries run on up to `jobs` threads.
SessionData run_session(const Culture& culture, const FamilyStimuli& stim, const WorkbenchConfig& cfg,
                        SessionKey key, std::uint64_t seed, int jobs = 1);

/// The artificial reservoir driven by the same delivery sequence. The noise
/// model is fitted on spontaneous windows of `culture` of length W.
LabeledDataset run_ar_session(const EsnReservoir& esn, const Culture& culture, const SessionData& session,
                              const WorkbenchConfig& cfg, double W_ms);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
    double sem = 0.0;
    int n = 0;
};

Summary summarize(const std::vector<double>& xs);

struct SessionResult {
    SessionKey key;
    std::string substrate;   // "culture", "ar" or "shuffle"
    CvResult cv;
};

struct WindowPoint {
    double W_ms = 0.0;
    Summary accuracy;
    std::vector<double> session_accuracy;
};

struct CrossDayRow {
    int day = 0;
    std::string substrate;   // "culture" or "shuffle"
    std::vector<double> session_accuracy;   // one per replicate
    Summary accuracy;
};

struct ExperimentReport {
    std::string id;
    Family family = Family::pointwise;
    std::vector<std::string> class_names;
    double W_ms = 0.0;
    std::vector<SessionResult> sessions;
    std::vector<WindowPoint> window_curve;
    std::vector<CrossDayRow> cross_day;
    double within_day1 = 0.0;               // mean CV accuracy on day-1 sessions (cross-day runs)
    std::uint64_t seed = 0;
    double elapsed_s = 0.0;                 // timing; kept out of report.json

    Summary overall(const std::string& substrate) const;
    Summary day(const std::string& substrate, int day) const;
    std::vector<Summary> per_class(const std::string& substrate) const;
};

struct RunOutput {
    ExperimentReport report;
    std::vector<SessionData> sessions;
    std::vector<LabeledDataset> ar_states;   // one per session when the AR substrate ran
};

struct RunOptions {
    Substrate substrate = Substrate::culture;
    bool shuffle = true;
    int jobs = 1;
};

/// Every (replicate, day) session of a family, cultures drifting between
/// days, each cross-validated; plus the AR pipeline and the shuffle control.
RunOutput run_family(Family f, const WorkbenchConfig& cfg, const RunOptions& opt = {});

/// All sessions of a family on the culture, without any training.
std::vector<SessionData> simulate_sessions(Family f, const WorkbenchConfig& cfg, int jobs = 1);

/// Accuracy versus window, re-extracting states from the same recordings.
/// Throws ProtocolError if a W exceeds the recorded post-stimulus window.
std::vector<WindowPoint> ablate_window(const std::vector<SessionData>& sessions, const WorkbenchConfig& cfg,
                                       const std::vector<double>& W_list, int jobs = 1);
ExperimentReport ablate_window(Family f, const WorkbenchConfig& cfg, const std::vector<double>& W_list,
                               int jobs = 1);

/// Readout trained on pooled day-1 sessions, frozen, evaluated on every
/// later session; shuffle control per day. Needs n_days >= 2.
std::vector<CrossDayRow> cross_day_rows(const std::vector<SessionData>& sessions, const WorkbenchConfig& cfg,
                                        double W_ms, int jobs = 1, double* within_day1 = nullptr);
ExperimentReport cross_day_eval(Family f, const WorkbenchConfig& cfg, int jobs = 1);

/// Spontaneous-activity noise model for the AR input.
NoiseModel culture_noise_model(const Culture& culture, const WorkbenchConfig& cfg, double W_ms,
                               std::uint64_t seed);

}  // namespace brc
