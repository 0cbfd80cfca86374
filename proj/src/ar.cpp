#include "brc/ar.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "brc/errors.hpp"

namespace brc {

namespace {

using json = nlohmann::json;

json config_json(const EsnConfig& c) {
    return {{"n_units", c.n_units},         {"sparsity", c.sparsity}, {"rho", c.rho},
            {"input_gain", c.input_gain},   {"leak", c.leak},         {"steps", c.steps},
            {"noise_scale", c.noise_scale}, {"seed", c.seed}};
}

EsnConfig config_from_json(const json& j) {
    EsnConfig c;
    c.n_units = j.at("n_units");
    c.sparsity = j.at("sparsity");
    c.rho = j.at("rho");
    c.input_gain = j.at("input_gain");
    c.leak = j.at("leak");
    c.steps = j.at("steps");
    c.noise_scale = j.at("noise_scale");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

std::vector<std::string> EsnConfig::validate() const {
    std::vector<std::string> out;
    if (n_units < 1) out.push_back("n_units must be >= 1");
    if (!(sparsity > 0.0 && sparsity <= 1.0)) out.push_back("sparsity must lie in (0,1]");
    if (!(rho >= 0.0) || !std::isfinite(rho)) out.push_back("rho must be >= 0");
    if (!(leak > 0.0 && leak <= 1.0)) out.push_back("leak must lie in (0,1]");
    if (steps < 1) out.push_back("steps must be >= 1");
    if (!(noise_scale >= 0.0)) out.push_back("noise_scale must be >= 0");
    return out;
}

double EsnReservoir::nonzero_fraction() const {
    const double n = static_cast<double>(W.rows());
    return n > 0 ? static_cast<double>(W.nonZeros()) / (n * n) : 0.0;
}

EsnReservoir init_esn(const EsnConfig& cfg) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError("esn: " + v.front());
    const int n = cfg.n_units;
    Rng rng(substream(cfg.seed, "esn"));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(cfg.sparsity * n * static_cast<double>(n) * 1.05) + 16);
    const double log_q = cfg.sparsity < 1.0 ? std::log1p(-cfg.sparsity) : 0.0;
    for (int r = 0; r < n; ++r) {
        // Geometric gaps between successive nonzeros of a Bernoulli row.
        long long c = -1;
        for (;;) {
            long long gap = 1;
            if (cfg.sparsity < 1.0) {
                const double u = 1.0 - rng.uniform();  // (0, 1]
                gap = 1 + static_cast<long long>(std::floor(std::log(u) / log_q));
            }
            c += gap;
            if (c >= n) break;
            trip.emplace_back(r, static_cast<int>(c), rng.normal());
        }
    }
    EsnReservoir esn;
    esn.cfg = cfg;
    esn.W.resize(n, n);
    esn.W.setFromTriplets(trip.begin(), trip.end());
    esn.W.makeCompressed();

    SpectralOptions opt;
    opt.seed = substream(cfg.seed, "esn-radius");
    esn.unscaled_radius = spectral_radius(esn.W, opt);
    if (!(esn.unscaled_radius > 1e-12)) {
        throw NumericError("esn: unscaled spectral radius is numerically zero (" + std::to_string(esn.unscaled_radius) + ")");
    }
    esn.W *= cfg.rho / esn.unscaled_radius;
    return esn;
}

std::vector<double> NoiseModel::sample(Rng& rng) const {
    std::vector<double> out(mean.size(), 0.0);
    if (family == "gaussian") {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            out[i] = std::max(0.0, rng.normal(mean[i], std::sqrt(mean[i])));
        }
    } else {
        for (std::size_t i = 0; i < mean.size(); ++i) out[i] = static_cast<double>(rng.poisson(mean[i]));
    }
    return out;
}

NoiseModel estimate_noise(std::span<const std::vector<std::int32_t>> windows) {
    if (windows.size() < 21) {
        throw ProtocolError("noise model needs more than 20 spontaneous windows, got " + std::to_string(windows.size()));
    }
    NoiseModel m;
    m.n_windows = static_cast<int>(windows.size());
    m.mean.assign(windows.front().size(), 0.0);
    for (const auto& w : windows) {
        if (w.size() != m.mean.size()) throw DataError("noise windows differ in channel count");
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] < 0) throw DataError("negative spike count in a noise window");
            m.mean[i] += w[i];
        }
    }
    for (auto& v : m.mean) v /= static_cast<double>(windows.size());
    return m;
}

std::vector<double> ar_state(const EsnReservoir& esn, const StimPattern& p, const NoiseModel& noise,
                             std::uint64_t seed) {
    const int n = esn.cfg.n_units;
    if (n != kNumChannels) throw ConfigError("ar_state needs one reservoir unit per electrode");
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (const auto& pair : p.pairs) {
        u[channel_index(pair.positive)] += 1.0;
        u[channel_index(pair.negative)] -= 1.0;
    }
    if (!noise.mean.empty()) {
        if (static_cast<int>(noise.mean.size()) != n) throw DataError("noise model channel count mismatch");
        Rng rng(substream(seed, "ar-noise"));
        const auto s = noise.sample(rng);
        for (int i = 0; i < n; ++i) u[i] += esn.cfg.noise_scale * s[i];
    }
    const Eigen::VectorXd drive = esn.cfg.input_gain * u;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < esn.cfg.steps; ++k) {
        Eigen::VectorXd pre = drive + esn.W * x;
        x = (1.0 - esn.cfg.leak) * x + esn.cfg.leak * pre.array().tanh().matrix();
    }
    return {x.data(), x.data() + n};
}

void save_esn(const EsnReservoir& esn, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write("BRCE", 4);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(esn.W.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(esn.W.nonZeros()));
    for (int r = 0; r < esn.W.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(esn.W, r); it; ++it) {
            detail::put_u32(out, static_cast<std::uint32_t>(it.row()));
            detail::put_u32(out, static_cast<std::uint32_t>(it.col()));
            detail::put_f64(out, it.value());
        }
    }
    json echo = config_json(esn.cfg);
    echo["unscaled_radius"] = esn.unscaled_radius;
    const std::string text = echo.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FormatError("write failed for " + path.string());
}

EsnReservoir load_esn(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    detail::LeReader rd(in, path.filename().string());
    char magic[4];
    rd.bytes(magic, 4, "magic");
    if (std::string(magic, 4) != "BRCE") throw FormatError(rd.name() + ": bad magic at offset 0");
    if (const auto v = rd.u32("version"); v != 1) {
        throw FormatError(rd.name() + ": unsupported version " + std::to_string(v) + " at offset 4");
    }
    const std::uint32_t n = rd.u32("dimension");
    const std::uint64_t nnz = rd.u64("nonzero count");
    if (nnz > std::uint64_t{n} * n) throw FormatError(rd.name() + ": nonzero count exceeds n^2 at offset 12");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nnz);
    for (std::uint64_t i = 0; i < nnz; ++i) {
        const auto r = rd.u32("row");
        const auto c = rd.u32("col");
        const double v = rd.f64("value");
        if (r >= n || c >= n) {
            throw FormatError(rd.name() + ": entry outside the matrix at offset " + std::to_string(rd.offset() - 16));
        }
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    const std::uint32_t len = rd.u32("config length");
    std::string text(len, '\0');
    rd.bytes(text.data(), len, "config echo");
    EsnReservoir esn;
    try {
        const json echo = json::parse(text);
        esn.cfg = config_from_json(echo);
        esn.unscaled_radius = echo.at("unscaled_radius");
    } catch (const json::exception& e) {
        throw FormatError(rd.name() + ": bad config echo: " + e.what());
    }
    esn.W.resize(n, n);
    esn.W.setFromTriplets(trip.begin(), trip.end());
    esn.W.makeCompressed();
    return esn;
}

}  // namespace brc
