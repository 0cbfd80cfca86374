#include "brc/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include "brc/errors.hpp"

namespace brc {

bool in_bounds(ElectrodeCoord c) noexcept {
    return c.row >= 0 && c.row < kGridSide && c.col >= 0 && c.col < kGridSide;
}

int channel_index(ElectrodeCoord c) {
    if (!in_bounds(c)) {
        throw BoundsError("electrode (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                          ") is outside the 64x64 grid");
    }
    return c.row * kGridSide + c.col;
}

ElectrodeCoord coord_of(int channel) {
    if (channel < 0 || channel >= kNumChannels) {
        throw BoundsError("channel " + std::to_string(channel) + " is outside [0, 4095]");
    }
    return {channel / kGridSide, channel % kGridSide};
}

int chebyshev_distance(ElectrodeCoord a, ElectrodeCoord b) noexcept {
    return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

std::string to_string(WaveShape s) {
    return s == WaveShape::monophasic ? "monophasic" : "biphasic";
}

WaveShape wave_shape_from_string(const std::string& s) {
    if (s == "monophasic") return WaveShape::monophasic;
    if (s == "biphasic") return WaveShape::biphasic;
    throw FormatError("unknown waveform shape '" + s + "'");
}

Waveform Waveform::monophasic(double amplitude_uA, double width_us) {
    return {WaveShape::monophasic, amplitude_uA, width_us, 0.0};
}

Waveform Waveform::biphasic(double amplitude_uA, double plus_us, double minus_us) {
    return {WaveShape::biphasic, amplitude_uA, plus_us, minus_us};
}

namespace {

void check_waveform_phases(const Waveform& w, std::vector<std::string>& out) {
    if (!(w.delta_plus_us > 0.0) || !std::isfinite(w.delta_plus_us)) {
        out.push_back("waveform: positive phase duration must be > 0");
    }
    if (w.shape == WaveShape::monophasic && w.delta_minus_us != 0.0) {
        out.push_back("waveform: monophasic pulse must have zero negative phase");
    }
    if (w.shape == WaveShape::biphasic && !(w.delta_minus_us > 0.0)) {
        out.push_back("waveform: biphasic pulse needs both phase durations > 0");
    }
}

std::vector<std::string> check(const StimPattern& p, bool require_positive_amplitude) {
    std::vector<std::string> out;
    if (p.pairs.empty()) out.push_back("empty pattern");

    check_waveform_phases(p.waveform, out);
    const double amp = p.waveform.amplitude_uA;
    if (!std::isfinite(amp) || amp < 0.0 || (require_positive_amplitude && amp == 0.0)) {
        out.push_back("waveform: amplitude must be > 0 uA");
    }

    std::set<ElectrodeCoord> seen;
    for (std::size_t i = 0; i < p.pairs.size(); ++i) {
        const auto& pr = p.pairs[i];
        const std::string where = " (pair " + std::to_string(i) + ")";
        bool ok = true;
        for (auto c : {pr.positive, pr.negative}) {
            if (!in_bounds(c)) {
                out.push_back("out of bounds" + where);
                ok = false;
            }
        }
        if (pr.positive == pr.negative) {
            out.push_back("poles coincide" + where);
            ok = false;
        } else if (!p.allow_non_adjacent && chebyshev_distance(pr.positive, pr.negative) != 1) {
            out.push_back("poles not adjacent" + where);
        }
        if (!ok) continue;
        for (auto c : {pr.positive, pr.negative}) {
            if (!seen.insert(c).second) {
                out.push_back("electrode reuse at (" + std::to_string(c.row) + "," +
                              std::to_string(c.col) + ")" + where);
            }
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> validate_pattern(const StimPattern& p) { return check(p, true); }

std::vector<std::string> validate_pattern_structure(const StimPattern& p) { return check(p, false); }

std::vector<ElectrodeCoord> pattern_electrodes(const StimPattern& p) {
    std::vector<ElectrodeCoord> out;
    std::set<ElectrodeCoord> seen;
    for (const auto& pr : p.pairs) {
        for (auto c : {pr.positive, pr.negative}) {
            if (seen.insert(c).second) out.push_back(c);
        }
    }
    return out;
}

}  // namespace brc
