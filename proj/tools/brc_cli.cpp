// Command-line front end of the workbench.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "brc/config.hpp"
#include "brc/embed.hpp"
#include "brc/errors.hpp"
#include "brc/exports.hpp"
#include "brc/harness.hpp"
#include "brc/recording_io.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;
    std::optional<int> mnist_subset;
};

brc::WorkbenchConfig load(const Globals& g) {
    brc::WorkbenchConfig cfg = g.config.empty() ? brc::WorkbenchConfig{} : brc::load_config(g.config);
#ifdef BRC_DEFAULT_MNIST_DIR
    if (cfg.patterns.mnist_images.empty()) cfg.patterns.mnist_images = fs::path(BRC_DEFAULT_MNIST_DIR) / "t10k-images-idx3-ubyte";
    if (cfg.patterns.mnist_labels.empty()) cfg.patterns.mnist_labels = fs::path(BRC_DEFAULT_MNIST_DIR) / "t10k-labels-idx1-ubyte";
#endif
    if (g.seed) cfg.protocol.seed = *g.seed;
    if (g.mnist_subset) cfg.patterns.mnist_subset = *g.mnist_subset;
    if (auto v = cfg.validate(); !v.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& m : v) msg += "\n  " + m;
        throw brc::ConfigError(msg);
    }
    return cfg;
}

fs::path out_dir(const Globals& g, const std::string& fallback) {
    return g.out.empty() ? fs::path("runs") / fallback : fs::path(g.out);
}

void print_summary(const brc::ExperimentReport& r) {
    for (const char* sub : {"culture", "ar", "shuffle"}) {
        const auto s = r.overall(sub);
        if (s.n == 0) continue;
        std::printf("%-8s accuracy %.3f +- %.3f (n = %d sessions)\n", sub, s.mean, s.std, s.n);
    }
    for (const auto& p : r.window_curve) {
        std::printf("W = %5.1f ms  accuracy %.3f +- %.3f (sem, n = %d)\n", p.W_ms, p.accuracy.mean, p.accuracy.sem,
                    p.accuracy.n);
    }
    if (!r.cross_day.empty()) std::printf("day 1 within-session accuracy %.3f\n", r.within_day1);
    for (const auto& row : r.cross_day) {
        std::printf("day %d %-8s accuracy %.3f +- %.3f (n = %d)\n", row.day, row.substrate.c_str(),
                    row.accuracy.mean, row.accuracy.std, row.accuracy.n);
    }
}

void cmd_grow(const Globals& g, int replicate, double spont_ms, bool raw) {
    const auto cfg = load(g);
    const auto culture = brc::grow_culture(brc::replicate_culture_config(cfg, replicate));
    const auto rec = brc::spontaneous_window(culture, spont_ms, brc::substream(cfg.protocol.seed, "grow-spontaneous"));
    int inhibitory = 0;
    for (auto x : culture.inhibitory) inhibitory += x;
    const double rate = static_cast<double>(rec.truth.spikes.size()) / culture.positions.size() / (spont_ms / 1000.0);
    const json summary{{"replicate", replicate},
                       {"seed", culture.cfg.seed},
                       {"n_neurons", culture.positions.size()},
                       {"n_inhibitory", inhibitory},
                       {"n_synapses", culture.synapse_count()},
                       {"mean_out_degree", culture.mean_out_degree()},
                       {"kernel_gain", culture.kernel_gain},
                       {"spontaneous_window_ms", spont_ms},
                       {"spontaneous_rate_hz", rate}};
    const auto dir = out_dir(g, "grow-replicate" + std::to_string(replicate));
    fs::create_directories(dir);
    brc::save_config(cfg, dir / "config.json");
    std::ofstream(dir / "culture.json") << summary.dump(2) << '\n';
    if (raw) {
        brc::save_raw(rec, dir / "spontaneous.brc");
        brc::save_spike_log(rec.truth.spikes, dir / "spontaneous_spikes.csv");
    }
    std::cout << summary.dump(2) << '\n';
}

void save_raw_recordings(const brc::RunOutput& run, const brc::WorkbenchConfig& cfg, int count, const fs::path& dir) {
    if (count <= 0 || run.sessions.empty()) return;
    // Replays the first deliveries of session 1 with their original seeds.
    const auto& s = run.sessions.front();
    const auto culture = brc::grow_culture(brc::replicate_culture_config(cfg, s.replicate));
    for (int i = 0; i < count && i < static_cast<int>(s.patterns.size()); ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const auto rec = brc::stimulate(culture, s.patterns[i], brc::substream(s.seed, "stim", {idx}));
        char name[64];
        std::snprintf(name, sizeof name, "session_%02d_delivery_%03d", s.session, i);
        brc::save_raw(rec, dir / "raw" / (std::string(name) + ".brc"));
        brc::save_spike_log(rec.truth.spikes, dir / "raw" / (std::string(name) + "_spikes.csv"));
        const auto det = brc::process_recording(rec, cfg.detector, cfg.filter, true);
        brc::save_event_records(det.events, dir / "raw" / (std::string(name) + "_events.csv"));
    }
}

void cmd_run(const Globals& g, const std::string& family, const std::string& substrate, bool shuffle, int raw) {
    const auto cfg = load(g);
    brc::RunOptions opt;
    opt.substrate = brc::substrate_from_string(substrate);
    opt.shuffle = shuffle;
    opt.jobs = g.jobs;
    const auto run = brc::run_family(brc::family_from_string(family), cfg, opt);
    const auto dir = out_dir(g, run.report.id);
    brc::write_run(run, cfg, dir);
    if (raw > 0) {
        fs::create_directories(dir / "raw");
        save_raw_recordings(run, cfg, raw, dir);
    }
    print_summary(run.report);
    std::printf("wrote %s (%.1f s)\n", dir.string().c_str(), run.report.elapsed_s);
}

void write_report_dir(const brc::ExperimentReport& r, const brc::WorkbenchConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    brc::save_config(cfg, dir / "config.json");
    brc::write_report(r, cfg, dir / "report.json");
    std::ofstream(dir / "timing.json") << json{{"elapsed_s", r.elapsed_s}}.dump(2) << '\n';
    if (!r.window_curve.empty()) brc::write_window_curve_csv(r.window_curve, dir / "curves" / "window.csv");
    if (!r.cross_day.empty()) brc::write_cross_day_csv(r.cross_day, dir / "curves" / "cross_day.csv");
}

void cmd_ablate(const Globals& g, const std::string& family, std::vector<double> W_list) {
    const auto cfg = load(g);
    if (W_list.empty()) W_list = cfg.protocol.W_list;
    const auto r = brc::ablate_window(brc::family_from_string(family), cfg, W_list, g.jobs);
    const auto dir = out_dir(g, r.id);
    write_report_dir(r, cfg, dir);
    print_summary(r);
    std::printf("wrote %s\n", dir.string().c_str());
}

void cmd_cross_day(const Globals& g, const std::string& family) {
    const auto cfg = load(g);
    const auto r = brc::cross_day_eval(brc::family_from_string(family), cfg, g.jobs);
    const auto dir = out_dir(g, r.id);
    write_report_dir(r, cfg, dir);
    print_summary(r);
    std::printf("wrote %s\n", dir.string().c_str());
}

void cmd_export_states(const Globals& g, const std::string& family, std::optional<double> W) {
    const auto cfg = load(g);
    const auto f = brc::family_from_string(family);
    const double w = W.value_or(brc::window_for(f, cfg.protocol));
    const auto sessions = brc::simulate_sessions(f, cfg, g.jobs);
    const auto dir = out_dir(g, family + "-states-seed" + std::to_string(cfg.protocol.seed));
    fs::create_directories(dir);
    brc::save_config(cfg, dir / "config.json");
    for (const auto& s : sessions) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "session_%02d", s.session);
        brc::write_states_csv(s.dataset(w), dir / "states" / (std::string(tag) + "_culture.csv"));
        brc::write_events_csv(s, dir / "events" / (std::string(tag) + ".csv"));
    }
    std::printf("wrote %zu sessions to %s\n", sessions.size(), dir.string().c_str());
}

void cmd_embed(const Globals& g, const std::string& states, int dims) {
    const auto ds = brc::read_states_csv(states);
    const auto e = brc::pca_embed(ds.features, dims);
    for (const auto& w : e.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::vector<std::string> labels;
    for (int l : ds.labels) labels.push_back(ds.class_names[static_cast<std::size_t>(l)]);
    const fs::path out = g.out.empty() ? fs::path(states).replace_extension(".pca.csv") : fs::path(g.out);
    brc::write_embedding_csv(e, labels, out);
    for (std::size_t k = 0; k < e.variance_ratio.size(); ++k) {
        std::printf("pc%zu explains %.1f%% of variance\n", k + 1, 100.0 * e.variance_ratio[k]);
    }
    std::printf("wrote %s\n", out.string().c_str());
}

void cmd_report(const std::string& run_dir) {
    std::ifstream in(fs::path(run_dir) / "report.json");
    if (!in) throw brc::FormatError("no report.json in " + run_dir);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw brc::FormatError(std::string("report.json: ") + e.what());
    }
    std::printf("%s (family %s, W = %g ms)\n", j.value("id", "?").c_str(), j.value("family", "?").c_str(),
                j.value("W_ms", 0.0));
    if (j.contains("summary")) {
        for (const auto& [sub, s] : j["summary"].items()) {
            std::printf("  %-8s %.3f +- %.3f (n = %d)\n", sub.c_str(), s["mean"].get<double>(), s["std"].get<double>(),
                        s["n"].get<int>());
        }
    }
    if (j.contains("per_class") && j["per_class"].contains("culture")) {
        std::printf("  per class (culture):");
        for (const auto& [name, s] : j["per_class"]["culture"].items()) {
            std::printf(" %s=%.2f", name.c_str(), s["mean"].get<double>());
        }
        std::printf("\n");
    }
    if (j.contains("window_curve")) {
        for (const auto& p : j["window_curve"]) {
            std::printf("  W = %5.1f ms  %.3f +- %.3f (sem)\n", p["W_ms"].get<double>(), p["mean"].get<double>(),
                        p["sem"].get<double>());
        }
    }
    if (j.contains("cross_day")) {
        for (const auto& r : j["cross_day"]) {
            std::printf("  day %d %-8s %.3f +- %.3f\n", r["day"].get<int>(), r["substrate"].get<std::string>().c_str(),
                        r["mean"].get<double>(), r["std"].get<double>());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reservoir-computing workbench on a simulated 64x64 electrode array"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Root seed (overrides protocol.seed)");
    app.add_option("--out", g.out, "Output directory (or file for embed)");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--mnist-subset", g.mnist_subset, "Number of MNIST images sampled")->check(CLI::PositiveNumber);

    const std::vector<std::string> families{"pointwise", "bars", "clock", "mnist"};

    auto* grow = app.add_subcommand("grow", "Grow one culture and record spontaneous activity");
    int replicate = 1;
    double spont_ms = 1000.0;
    bool raw_spont = false;
    grow->add_option("--replicate", replicate, "Replicate number (1-based)")->check(CLI::PositiveNumber);
    grow->add_option("--duration-ms", spont_ms, "Spontaneous recording length");
    grow->add_flag("--raw", raw_spont, "Also write the raw traces and spike log");

    auto* run = app.add_subcommand("run", "Run one experiment family end to end");
    std::string family = "clock", substrate = "culture";
    bool no_shuffle = false;
    int save_raw = 0;
    run->add_option("--family", family, "Stimulus family")->required()->check(CLI::IsMember(families));
    run->add_option("--substrate", substrate, "Reservoir substrate")->check(CLI::IsMember({"culture", "ar", "both"}));
    run->add_flag("--no-shuffle", no_shuffle, "Skip the spatial-shuffle control");
    run->add_option("--save-raw", save_raw, "Write raw traces of the first N deliveries of session 1");

    auto* ablate = app.add_subcommand("ablate-window", "Accuracy versus post-stimulus window");
    std::vector<double> W_list;
    ablate->add_option("--family", family, "Stimulus family")->required()->check(CLI::IsMember(families));
    ablate->add_option("--W", W_list, "Window lengths in ms (default from config)");

    auto* cross = app.add_subcommand("cross-day", "Train on day 1, test on later days");
    cross->add_option("--family", family, "Stimulus family")->required()->check(CLI::IsMember(families));

    auto* shuffle = app.add_subcommand("shuffle-baseline", "Culture accuracy against the spatial-shuffle control");
    shuffle->add_option("--family", family, "Stimulus family")->required()->check(CLI::IsMember(families));

    auto* exp = app.add_subcommand("export-states", "Simulate sessions and write state matrices");
    std::optional<double> W_export;
    exp->add_option("--family", family, "Stimulus family")->required()->check(CLI::IsMember(families));
    exp->add_option("--W", W_export, "Window length in ms");

    auto* embed = app.add_subcommand("embed", "2-D PCA projection of a state CSV");
    std::string states;
    int dims = 2;
    embed->add_option("--states", states, "State CSV written by run or export-states")->required()->check(CLI::ExistingFile);
    embed->add_option("--dims", dims, "Number of components")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "Summarize a run directory");
    std::string run_dir;
    report->add_option("run_dir", run_dir, "Directory containing report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*grow) cmd_grow(g, replicate, spont_ms, raw_spont);
        if (*run) cmd_run(g, family, substrate, !no_shuffle, save_raw);
        if (*ablate) cmd_ablate(g, family, W_list);
        if (*cross) cmd_cross_day(g, family);
        if (*shuffle) cmd_run(g, family, "culture", true, 0);
        if (*exp) cmd_export_states(g, family, W_export);
        if (*embed) cmd_embed(g, states, dims);
        if (*report) cmd_report(run_dir);
    } catch (const brc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
