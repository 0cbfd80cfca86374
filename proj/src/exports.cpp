#include "brc/exports.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "brc/errors.hpp"
#include "brc/recording_io.hpp"

namespace brc {

namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"sem", s.sem}, {"n", s.n}}; }

std::string session_tag(int session) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "session_%02d", session);
    return buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError(where + ": bad number '" + s + "'");
    return v;
}

const std::vector<std::string> kMetaColumns{"sample", "label", "replicate", "day", "session", "stimulus_index", "W_ms"};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_states_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    auto out = open_out(path);
    for (std::size_t c = 0; c < kMetaColumns.size(); ++c) out << (c ? "," : "") << kMetaColumns[c];
    for (int ch = 0; ch < ds.dim(); ++ch) out << ",ch" << ch;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& name = ds.class_names[static_cast<std::size_t>(ds.labels[i])];
        if (name.find(',') != std::string::npos) throw DataError("class name contains a comma: " + name);
        const StateMeta m = ds.meta.empty() ? StateMeta{} : ds.meta[i];
        out << i << ',' << name << ',' << m.replicate << ',' << m.day << ',' << m.session << ','
            << m.stimulus_index << ',' << format_double(m.W_ms);
        for (double v : ds.features[i]) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

LabeledDataset read_states_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    const std::string name = path.filename().string();
    std::string line;
    if (!std::getline(in, line)) throw FormatError(name + ": empty file");
    const auto header = split(line);
    if (header.size() < kMetaColumns.size() ||
        !std::equal(kMetaColumns.begin(), kMetaColumns.end(), header.begin())) {
        throw FormatError(name + ": not a state matrix (unexpected header)");
    }
    const std::size_t dim = header.size() - kMetaColumns.size();
    LabeledDataset ds;
    std::map<std::string, int> ids;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        const std::string where = name + " line " + std::to_string(lineno);
        if (cells.size() != header.size()) throw FormatError(where + ": expected " + std::to_string(header.size()) + " columns");
        auto [it, fresh] = ids.try_emplace(cells[1], static_cast<int>(ds.class_names.size()));
        if (fresh) ds.class_names.push_back(cells[1]);
        ds.labels.push_back(it->second);
        StateMeta m;
        m.replicate = parse_number<int>(cells[2], where);
        m.day = parse_number<int>(cells[3], where);
        m.session = parse_number<int>(cells[4], where);
        m.stimulus_index = parse_number<int>(cells[5], where);
        m.W_ms = parse_number<double>(cells[6], where);
        ds.meta.push_back(m);
        std::vector<double> x(dim);
        for (std::size_t j = 0; j < dim; ++j) x[j] = parse_number<double>(cells[kMetaColumns.size() + j], where);
        ds.features.push_back(std::move(x));
    }
    return ds;
}

void write_events_csv(const SessionData& s, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "delivery,label,channel,t_sample,t_ms,peak_uV\n";
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& label = s.class_names[static_cast<std::size_t>(s.labels[i])];
        for (const auto& e : s.events[i]) {
            const double t_ms = 1000.0 * (e.t_sample - s.t_stim[i]) / kSampleRateHz;
            out << i << ',' << label << ',' << e.channel << ',' << e.t_sample << ',' << format_double(t_ms) << ','
                << format_double(e.peak_uV) << '\n';
        }
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

json report_json(const ExperimentReport& r, const WorkbenchConfig& cfg) {
    json j;
    j["id"] = r.id;
    j["family"] = to_string(r.family);
    j["seed"] = r.seed;
    j["W_ms"] = r.W_ms;
    j["isi_s"] = cfg.protocol.isi_s;
    j["class_names"] = r.class_names;
    j["standardize"] = cfg.readout.standardize;

    std::set<std::string> substrates;
    json sessions = json::array();
    for (const auto& s : r.sessions) {
        substrates.insert(s.substrate);
        json per_class = json::object();
        for (std::size_t c = 0; c < r.class_names.size() && c < s.cv.per_class_accuracy.size(); ++c) {
            per_class[r.class_names[c]] = {{"accuracy", s.cv.per_class_accuracy[c]}, {"n", s.cv.per_class_count[c]}};
        }
        sessions.push_back({{"replicate", s.key.replicate},
                            {"day", s.key.day},
                            {"session", s.key.session},
                            {"substrate", s.substrate},
                            {"accuracy", s.cv.mean},
                            {"std", s.cv.std},
                            {"n_folds", s.cv.k},
                            {"fold_accuracy", s.cv.fold_accuracy},
                            {"per_class", per_class},
                            {"confusion", s.cv.confusion}});
    }
    j["sessions"] = sessions;

    json summary = json::object(), per_day = json::object(), per_class = json::object();
    for (const auto& sub : substrates) {
        summary[sub] = summary_json(r.overall(sub));
        std::set<int> days;
        for (const auto& s : r.sessions) {
            if (s.substrate == sub) days.insert(s.key.day);
        }
        json dl = json::array();
        for (int d : days) {
            auto row = summary_json(r.day(sub, d));
            row["day"] = d;
            dl.push_back(row);
        }
        per_day[sub] = dl;
        json pc = json::object();
        const auto classes = r.per_class(sub);
        for (std::size_t c = 0; c < classes.size(); ++c) pc[r.class_names[c]] = summary_json(classes[c]);
        per_class[sub] = pc;
    }
    j["summary"] = summary;
    j["per_day"] = per_day;
    j["per_class"] = per_class;

    if (!r.window_curve.empty()) {
        json wc = json::array();
        for (const auto& p : r.window_curve) {
            auto row = summary_json(p.accuracy);
            row["W_ms"] = p.W_ms;
            row["session_accuracy"] = p.session_accuracy;
            wc.push_back(row);
        }
        j["window_curve"] = wc;
    }
    if (!r.cross_day.empty()) {
        json cd = json::array();
        for (const auto& row : r.cross_day) {
            auto o = summary_json(row.accuracy);
            o["day"] = row.day;
            o["substrate"] = row.substrate;
            o["session_accuracy"] = row.session_accuracy;
            cd.push_back(o);
        }
        j["cross_day"] = cd;
        j["within_day1"] = r.within_day1;
    }
    j["config"] = to_json(cfg);
    return j;
}

void write_report(const ExperimentReport& r, const WorkbenchConfig& cfg, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << report_json(r, cfg).dump(2) << '\n';
    if (!out) throw FormatError("write failed for " + path.string());
}

void write_window_curve_csv(const std::vector<WindowPoint>& curve, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "W_ms,mean,std,sem,n\n";
    for (const auto& p : curve) {
        out << format_double(p.W_ms) << ',' << format_double(p.accuracy.mean) << ',' << format_double(p.accuracy.std)
            << ',' << format_double(p.accuracy.sem) << ',' << p.accuracy.n << '\n';
    }
}

void write_cross_day_csv(const std::vector<CrossDayRow>& rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "day,substrate,mean,std,sem,n\n";
    for (const auto& r : rows) {
        out << r.day << ',' << r.substrate << ',' << format_double(r.accuracy.mean) << ','
            << format_double(r.accuracy.std) << ',' << format_double(r.accuracy.sem) << ',' << r.accuracy.n << '\n';
    }
}

void write_per_class_csv(const ExperimentReport& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "substrate,class,mean,std,n\n";
    std::set<std::string> substrates;
    for (const auto& s : r.sessions) substrates.insert(s.substrate);
    for (const auto& sub : substrates) {
        const auto classes = r.per_class(sub);
        for (std::size_t c = 0; c < classes.size(); ++c) {
            out << sub << ',' << r.class_names[c] << ',' << format_double(classes[c].mean) << ','
                << format_double(classes[c].std) << ',' << classes[c].n << '\n';
        }
    }
}

void write_embedding_csv(const Embedding& e, const std::vector<std::string>& labels,
                         const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "sample,label";
    for (Eigen::Index k = 0; k < e.coords.cols(); ++k) out << ",pc" << (k + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < e.coords.rows(); ++i) {
        out << i << ',' << (static_cast<std::size_t>(i) < labels.size() ? labels[i] : "");
        for (Eigen::Index k = 0; k < e.coords.cols(); ++k) out << ',' << format_double(e.coords(i, k));
        out << '\n';
    }
}

void write_run(const RunOutput& run, const WorkbenchConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_config(cfg, dir / "config.json");
    write_report(run.report, cfg, dir / "report.json");
    {
        auto out = open_out(dir / "timing.json");
        out << json{{"elapsed_s", run.report.elapsed_s}}.dump(2) << '\n';
    }
    const double W = run.report.W_ms;
    for (std::size_t i = 0; i < run.sessions.size(); ++i) {
        const auto& s = run.sessions[i];
        const auto tag = session_tag(s.session);
        std::filesystem::create_directories(dir / "models");
        if (!s.events.empty()) {
            const auto ds = s.dataset(W);
            write_states_csv(ds, dir / "states" / (tag + "_culture.csv"));
            write_events_csv(s, dir / "events" / (tag + ".csv"));
            // Readout fitted on the whole session, for reuse outside cross-validation.
            save_model(train_slp(ds, cfg.readout, substream(s.seed, "model")), dir / "models" / (tag + "_culture.json"));
        }
        std::filesystem::create_directories(dir / "patterns");
        save_patterns(s.patterns, dir / "patterns" / (tag + ".jsonl"));
        if (i < run.ar_states.size()) {
            write_states_csv(run.ar_states[i], dir / "states" / (tag + "_ar.csv"));
            save_model(train_slp(run.ar_states[i], cfg.readout, substream(s.seed, "model-ar")),
                       dir / "models" / (tag + "_ar.json"));
        }
    }
    write_per_class_csv(run.report, dir / "curves" / "per_class.csv");
    {
        auto out = open_out(dir / "curves" / "per_session.csv");
        out << "replicate,day,session,substrate,accuracy,std\n";
        for (const auto& s : run.report.sessions) {
            out << s.key.replicate << ',' << s.key.day << ',' << s.key.session << ',' << s.substrate << ','
                << format_double(s.cv.mean) << ',' << format_double(s.cv.std) << '\n';
        }
    }
    if (!run.report.window_curve.empty()) write_window_curve_csv(run.report.window_curve, dir / "curves" / "window.csv");
    if (!run.report.cross_day.empty()) write_cross_day_csv(run.report.cross_day, dir / "curves" / "cross_day.csv");
}

}  // namespace brc
