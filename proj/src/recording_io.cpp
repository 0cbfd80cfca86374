#include "brc/recording_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "brc/errors.hpp"

namespace brc {

void save_raw(const RawRecording& rec, const std::filesystem::path& path) {
    const std::size_t expected = static_cast<std::size_t>(rec.n_channels) * rec.n_samples;
    if (rec.traces.size() != expected) throw DataError("save_raw: trace buffer does not match the header");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write("BRC1", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(rec.n_channels));
    detail::put_u32(out, static_cast<std::uint32_t>(rec.n_samples));
    detail::put_u32(out, static_cast<std::uint32_t>(rec.sample_rate_hz));
    detail::put_u32(out, static_cast<std::uint32_t>(rec.t_stim_sample));
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(rec.traces.data()),
                  static_cast<std::streamsize>(rec.traces.size() * sizeof(float)));
    } else {
        for (float v : rec.traces) detail::put_f32(out, v);
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

RawRecording load_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    detail::LeReader rd(in, path.filename().string());
    char magic[4];
    rd.bytes(magic, 4, "magic");
    if (std::string(magic, 4) != "BRC1") throw FormatError(rd.name() + ": bad magic at offset 0");
    RawRecording rec;
    rec.n_channels = static_cast<int>(rd.u32("n_channels"));
    rec.n_samples = static_cast<int>(rd.u32("n_samples"));
    rec.sample_rate_hz = static_cast<int>(rd.u32("sample_rate_hz"));
    rec.t_stim_sample = static_cast<int>(rd.u32("t_stim_sample"));
    if (rec.n_channels < 0 || rec.n_samples < 0) throw FormatError(rd.name() + ": negative dimensions in header");
    const std::size_t count = static_cast<std::size_t>(rec.n_channels) * rec.n_samples;
    rec.traces.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        rd.bytes(rec.traces.data(), count * sizeof(float), "trace payload");
    } else {
        for (auto& v : rec.traces) v = rd.f32("trace payload");
    }
    if (!rd.at_end()) throw FormatError(rd.name() + ": trailing bytes after offset " + std::to_string(rd.offset()));
    return rec;
}

void save_spike_log(const std::vector<SpikeLogEntry>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "neuron,time_ms\n";
    char buf[64];
    for (const auto& s : log) {
        auto res = std::to_chars(buf, buf + sizeof buf, s.time_ms);
        out << s.neuron << ',' << std::string_view(buf, res.ptr - buf) << '\n';
    }
}

std::vector<SpikeLogEntry> load_spike_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<SpikeLogEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line == "neuron,time_ms") continue;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        SpikeLogEntry e{};
        const char* end = line.data() + line.size();
        if (comma == std::string::npos ||
            std::from_chars(line.data(), line.data() + comma, e.neuron).ec != std::errc{} ||
            std::from_chars(line.data() + comma + 1, end, e.time_ms).ec != std::errc{}) {
            throw FormatError(path.filename().string() + ": malformed spike record on line " + std::to_string(lineno));
        }
        out.push_back(e);
    }
    return out;
}

void save_event_records(const FilteredEvents& events, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "channel,t_sample,peak_uV,S,kept\n";
    auto emit = [&](const SpikeEvent& e, bool kept) {
        const double S = e.snippet.empty() ? 0.0 : normalized_area(e.snippet);
        out << e.channel << ',' << e.t_sample << ',' << e.peak_uV << ',' << S << ',' << (kept ? 1 : 0) << '\n';
    };
    for (const auto& e : events.kept) emit(e, true);
    for (const auto& e : events.rejected) emit(e, false);
}

void save_patterns(const std::vector<StimPattern>& patterns, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    for (const auto& p : patterns) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& pr : p.pairs) {
            pairs.push_back({pr.positive.row, pr.positive.col, pr.negative.row, pr.negative.col});
        }
        nlohmann::json j{{"label", p.label},
                         {"waveform",
                          {{"shape", to_string(p.waveform.shape)},
                           {"amplitude_uA", p.waveform.amplitude_uA},
                           {"delta_plus_us", p.waveform.delta_plus_us},
                           {"delta_minus_us", p.waveform.delta_minus_us}}},
                         {"pairs", pairs}};
        if (p.allow_non_adjacent) j["allow_non_adjacent"] = true;
        out << j.dump() << '\n';
    }
}

std::vector<StimPattern> load_patterns(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<StimPattern> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + " line " + std::to_string(lineno);
        try {
            const auto j = nlohmann::json::parse(line);
            StimPattern p;
            p.label = j.at("label").get<std::string>();
            const auto& w = j.at("waveform");
            p.waveform.shape = wave_shape_from_string(w.at("shape").get<std::string>());
            p.waveform.amplitude_uA = w.at("amplitude_uA").get<double>();
            p.waveform.delta_plus_us = w.at("delta_plus_us").get<double>();
            p.waveform.delta_minus_us = w.at("delta_minus_us").get<double>();
            for (const auto& q : j.at("pairs")) {
                if (!q.is_array() || q.size() != 4) throw FormatError(where + ": a pair needs four integers");
                p.pairs.push_back({{q[0].get<int>(), q[1].get<int>()}, {q[2].get<int>(), q[3].get<int>()}});
            }
            p.allow_non_adjacent = j.value("allow_non_adjacent", false);
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + ": " + e.what());
        } catch (const ConfigError& e) {
            throw FormatError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace brc
