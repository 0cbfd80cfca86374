#include "brc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "brc/errors.hpp"
#include "brc/parallel.hpp"
#include "brc/rng.hpp"

namespace brc {

namespace {

using json = nlohmann::json;

struct SparseRow {
    std::vector<int> idx;
    std::vector<double> val;
};

SparseRow sparsify(const std::vector<double>& x) {
    SparseRow r;
    for (int j = 0; j < static_cast<int>(x.size()); ++j) {
        if (x[j] != 0.0) {
            r.idx.push_back(j);
            r.val.push_back(x[j]);
        }
    }
    return r;
}

void softmax_inplace(std::vector<double>& s) {
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (auto& v : s) {
        v = std::exp(v - mx);
        z += v;
    }
    for (auto& v : s) v /= z;
}

}  // namespace

void LabeledDataset::validate() const {
    if (features.size() != labels.size()) throw DataError("dataset: features and labels differ in length");
    if (!meta.empty() && meta.size() != labels.size()) throw DataError("dataset: metadata length mismatch");
    const std::size_t d = features.empty() ? 0 : features.front().size();
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != d) throw DataError("dataset: sample " + std::to_string(i) + " has a different dimension");
        for (double v : features[i]) {
            if (!std::isfinite(v)) throw DataError("dataset: non-finite feature in sample " + std::to_string(i));
        }
        if (labels[i] < 0 || labels[i] >= n_classes()) {
            throw DataError("dataset: label " + std::to_string(labels[i]) + " outside the class list");
        }
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> idx) const {
    LabeledDataset out;
    out.class_names = class_names;
    for (auto i : idx) {
        out.features.push_back(features.at(i));
        out.labels.push_back(labels.at(i));
        if (!meta.empty()) out.meta.push_back(meta.at(i));
    }
    return out;
}

void LabeledDataset::append(const LabeledDataset& other) {
    if (class_names.empty()) class_names = other.class_names;
    if (other.class_names != class_names) throw DataError("dataset: cannot append a set with different classes");
    if (!meta.empty() || features.empty()) {
        if (!other.meta.empty() || other.features.empty()) {
            meta.insert(meta.end(), other.meta.begin(), other.meta.end());
        } else {
            meta.clear();
        }
    }
    features.insert(features.end(), other.features.begin(), other.features.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

std::vector<std::string> TrainConfig::validate() const {
    std::vector<std::string> out;
    if (epochs < 1) out.push_back("epochs must be >= 1");
    if (!(lr0 > 0.0)) out.push_back("lr0 must be > 0");
    if (!(lr_decay_epochs > 0.0)) out.push_back("lr_decay_epochs must be > 0");
    if (batch_size < 1) out.push_back("batch_size must be >= 1");
    return out;
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) return {};
    std::vector<double> s(scores.begin(), scores.end());
    softmax_inplace(s);
    return s;
}

ReadoutModel train_slp(const LabeledDataset& ds, const TrainConfig& cfg, std::uint64_t seed) {
    if (auto v = cfg.validate(); !v.empty()) throw ConfigError("readout: " + v.front());
    ds.validate();
    const int C = ds.n_classes();
    std::vector<int> seen(std::max(C, 0), 0);
    for (int y : ds.labels) seen[y] = 1;
    if (C < 2 || std::accumulate(seen.begin(), seen.end(), 0) < 2) {
        throw TrainingError("readout needs at least two classes present in the training data");
    }
    const int d = ds.dim();
    const std::size_t n = ds.size();

    ReadoutModel m;
    m.n_classes = C;
    m.dim = d;
    m.class_names = ds.class_names;
    m.standardize = cfg.standardize;
    m.train = cfg;
    m.seed = seed;
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 1.0);

    std::vector<double> inv2(d, 1.0);  // 1/s^2, 0 for constant features
    if (cfg.standardize) {
        for (const auto& x : ds.features) {
            for (int j = 0; j < d; ++j) m.mean[j] += x[j];
        }
        for (auto& v : m.mean) v /= static_cast<double>(n);
        std::vector<double> var(d, 0.0);
        for (const auto& x : ds.features) {
            for (int j = 0; j < d; ++j) var[j] += (x[j] - m.mean[j]) * (x[j] - m.mean[j]);
        }
        for (int j = 0; j < d; ++j) {
            m.scale[j] = std::sqrt(var[j] / static_cast<double>(n));
            inv2[j] = m.scale[j] > 0.0 ? 1.0 / (m.scale[j] * m.scale[j]) : 0.0;
        }
    }

    // Work in raw-feature coordinates so sparse count vectors stay cheap:
    // W z = V x - V mu with V = A + c (x) r, r = mu / s^2. Only A is touched
    // per nonzero; c absorbs the dense centering part of every update.
    std::vector<double> r(d, 0.0);
    double r_mu = 0.0;
    for (int j = 0; j < d; ++j) {
        r[j] = m.mean[j] * inv2[j];
        r_mu += r[j] * m.mean[j];
    }
    std::vector<double> A(static_cast<std::size_t>(d) * C, 0.0);  // feature-major
    std::vector<double> c(C, 0.0), b(C, 0.0), q(C, 0.0);           // q = A mu

    std::vector<SparseRow> rows(n);
    std::vector<double> r_x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = sparsify(ds.features[i]);
        for (std::size_t t = 0; t < rows[i].idx.size(); ++t) r_x[i] += r[rows[i].idx[t]] * rows[i].val[t];
    }

    Rng rng(substream(seed, "sgd"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> delta(cfg.batch_size, std::vector<double>(C));
    m.loss_trace.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        const double lr = cfg.lr0 / (1.0 + epoch / cfg.lr_decay_epochs);
        double loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const double step = lr / static_cast<double>(stop - start);
            for (std::size_t bi = start; bi < stop; ++bi) {
                const std::size_t i = order[bi];
                auto& p = delta[bi - start];
                for (int k = 0; k < C; ++k) p[k] = b[k] - q[k] + c[k] * (r_x[i] - r_mu);
                const auto& row = rows[i];
                for (std::size_t t = 0; t < row.idx.size(); ++t) {
                    const double* a = A.data() + static_cast<std::size_t>(row.idx[t]) * C;
                    const double xv = row.val[t];
                    for (int k = 0; k < C; ++k) p[k] += a[k] * xv;
                }
                softmax_inplace(p);
                const int y = ds.labels[i];
                loss -= std::log(std::max(p[y], 1e-300));
                p[y] -= 1.0;
            }
            for (std::size_t bi = start; bi < stop; ++bi) {
                const std::size_t i = order[bi];
                const auto& p = delta[bi - start];
                const auto& row = rows[i];
                for (std::size_t t = 0; t < row.idx.size(); ++t) {
                    const int j = row.idx[t];
                    const double f = step * row.val[t] * inv2[j];
                    double* a = A.data() + static_cast<std::size_t>(j) * C;
                    for (int k = 0; k < C; ++k) {
                        const double da = f * p[k];
                        a[k] -= da;
                        q[k] -= da * m.mean[j];
                    }
                }
                for (int k = 0; k < C; ++k) {
                    c[k] += step * p[k];
                    b[k] -= step * p[k];
                }
            }
        }
        m.loss_trace.push_back(loss / static_cast<double>(n));
    }
    m.final_loss = m.loss_trace.back();

    m.weights.setZero(C, d);
    m.bias.resize(C);
    for (int k = 0; k < C; ++k) m.bias[k] = b[k];
    for (int j = 0; j < d; ++j) {
        if (cfg.standardize && m.scale[j] == 0.0) continue;
        for (int k = 0; k < C; ++k) {
            const double v = A[static_cast<std::size_t>(j) * C + k] + c[k] * r[j];
            m.weights(k, j) = v * m.scale[j];
        }
    }
    return m;
}

Prediction predict(const ReadoutModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.dim) {
        throw DataError("predict: expected " + std::to_string(m.dim) + " features, got " + std::to_string(x.size()));
    }
    Prediction out;
    out.scores.resize(m.n_classes);
    for (int k = 0; k < m.n_classes; ++k) out.scores[k] = m.bias[k];
    for (int j = 0; j < m.dim; ++j) {
        double z = x[j];
        if (m.standardize) {
            if (m.scale[j] == 0.0) continue;
            z = (z - m.mean[j]) / m.scale[j];
        }
        if (z == 0.0) continue;
        for (int k = 0; k < m.n_classes; ++k) out.scores[k] += m.weights(k, j) * z;
    }
    out.label = 0;
    for (int k = 1; k < m.n_classes; ++k) {
        if (out.scores[k] > out.scores[out.label]) out.label = k;
    }
    return out;
}

double cross_entropy(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                     std::span<const int> labels, Eigen::MatrixXd* gW, Eigen::VectorXd* gb) {
    const auto n = X.rows();
    if (static_cast<std::size_t>(n) != labels.size() || X.cols() != W.cols() || W.rows() != b.size()) {
        throw DataError("cross_entropy: shape mismatch");
    }
    if (gW) gW->setZero(W.rows(), W.cols());
    if (gb) gb->setZero(b.size());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd s = W * X.row(i).transpose() + b;
        std::vector<double> p(s.data(), s.data() + s.size());
        softmax_inplace(p);
        loss -= std::log(std::max(p[labels[i]], 1e-300));
        p[labels[i]] -= 1.0;
        Eigen::Map<Eigen::VectorXd> delta(p.data(), static_cast<Eigen::Index>(p.size()));
        if (gW) *gW += delta * X.row(i);
        if (gb) *gb += delta;
    }
    if (n > 0) {
        loss /= static_cast<double>(n);
        if (gW) *gW /= static_cast<double>(n);
        if (gb) *gb /= static_cast<double>(n);
    }
    return loss;
}

std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int k, std::uint64_t seed) {
    if (k < 2) throw ProtocolError("cross-validation needs k >= 2");
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
    std::vector<int> fold(labels.size(), -1);
    int next = 0;
    for (int cls = 0; cls < n_classes; ++cls) {
        auto& members = by_class[cls];
        if (members.empty()) continue;
        if (static_cast<int>(members.size()) < k) {
            throw ProtocolError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                " samples, fewer than k = " + std::to_string(k));
        }
        Rng rng(substream(seed, "fold", {static_cast<std::uint64_t>(cls)}));
        std::shuffle(members.begin(), members.end(), rng.engine());
        for (auto i : members) {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

namespace {

void finish(CvResult& r) {
    const int C = static_cast<int>(r.confusion.size());
    r.per_class_accuracy.assign(C, 0.0);
    r.per_class_count.assign(C, 0);
    for (int t = 0; t < C; ++t) {
        const int total = std::accumulate(r.confusion[t].begin(), r.confusion[t].end(), 0);
        r.per_class_count[t] = total;
        r.per_class_accuracy[t] = total > 0 ? static_cast<double>(r.confusion[t][t]) / total : 0.0;
    }
    const double nf = static_cast<double>(r.fold_accuracy.size());
    r.mean = nf > 0 ? std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / nf : 0.0;
    double ss = 0.0;
    for (double a : r.fold_accuracy) ss += (a - r.mean) * (a - r.mean);
    r.std = nf > 1 ? std::sqrt(ss / (nf - 1.0)) : 0.0;
}

}  // namespace

CvResult cross_validate(const LabeledDataset& ds, int k, const TrainConfig& cfg, std::uint64_t seed, int jobs) {
    ds.validate();
    const int C = ds.n_classes();
    CvResult r;
    r.k = k;
    r.fold_of = stratified_folds(ds.labels, C, k, substream(seed, "folds"));
    r.fold_accuracy.assign(k, 0.0);
    std::vector<std::vector<std::vector<int>>> conf(k, std::vector<std::vector<int>>(C, std::vector<int>(C, 0)));

    parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < ds.size(); ++i) (r.fold_of[i] == static_cast<int>(f) ? test : train).push_back(i);
        const auto model = train_slp(ds.subset(train), cfg, substream(seed, "train", {f}));
        int correct = 0;
        for (auto i : test) {
            const int pred = predict(model, ds.features[i]).label;
            ++conf[f][ds.labels[i]][pred];
            correct += pred == ds.labels[i];
        }
        r.fold_accuracy[f] = test.empty() ? 0.0 : static_cast<double>(correct) / test.size();
    });

    r.confusion.assign(C, std::vector<int>(C, 0));
    for (int f = 0; f < k; ++f) {
        for (int t = 0; t < C; ++t) {
            for (int p = 0; p < C; ++p) r.confusion[t][p] += conf[f][t][p];
        }
    }
    finish(r);
    return r;
}

CvResult evaluate(const ReadoutModel& m, const LabeledDataset& ds) {
    ds.validate();
    CvResult r;
    r.k = 1;
    const int C = m.n_classes;
    r.confusion.assign(C, std::vector<int>(C, 0));
    int correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int pred = predict(m, ds.features[i]).label;
        ++r.confusion.at(ds.labels[i]).at(pred);
        correct += pred == ds.labels[i];
    }
    r.fold_accuracy.push_back(ds.size() ? static_cast<double>(correct) / ds.size() : 0.0);
    r.fold_of.assign(ds.size(), 0);
    finish(r);
    return r;
}

LabeledDataset shuffle_baseline(const LabeledDataset& ds, std::uint64_t seed) {
    LabeledDataset out = ds;
    for (std::size_t i = 0; i < out.size(); ++i) {
        Rng rng(substream(seed, "shuffle", {i}));
        std::shuffle(out.features[i].begin(), out.features[i].end(), rng.engine());
    }
    return out;
}

void save_model(const ReadoutModel& m, const std::filesystem::path& path) {
    json j;
    j["format"] = "brc-readout-1";
    j["n_classes"] = m.n_classes;
    j["dim"] = m.dim;
    j["class_names"] = m.class_names;
    j["standardize"] = m.standardize;
    j["mean"] = m.mean;
    j["scale"] = m.scale;
    json w = json::array();
    for (int k = 0; k < m.n_classes; ++k) {
        std::vector<double> row(m.weights.cols());
        for (Eigen::Index c = 0; c < m.weights.cols(); ++c) row[c] = m.weights(k, c);
        w.push_back(row);
    }
    j["weights"] = w;
    j["bias"] = std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size());
    j["training"] = {{"epochs", m.train.epochs},
                     {"lr0", m.train.lr0},
                     {"lr_decay_epochs", m.train.lr_decay_epochs},
                     {"batch_size", m.train.batch_size},
                     {"standardize", m.train.standardize},
                     {"seed", m.seed},
                     {"final_loss", m.final_loss},
                     {"loss_trace", m.loss_trace}};
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump() << '\n';
}

ReadoutModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    json j;
    try {
        in >> j;
        if (j.at("format") != "brc-readout-1") throw FormatError(path.string() + ": unknown model format");
        ReadoutModel m;
        m.n_classes = j.at("n_classes");
        m.dim = j.at("dim");
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.standardize = j.at("standardize");
        m.mean = j.at("mean").get<std::vector<double>>();
        m.scale = j.at("scale").get<std::vector<double>>();
        const auto& w = j.at("weights");
        m.weights.resize(m.n_classes, m.dim);
        for (int k = 0; k < m.n_classes; ++k) {
            const auto row = w.at(k).get<std::vector<double>>();
            if (static_cast<int>(row.size()) != m.dim) throw FormatError(path.string() + ": weight row size mismatch");
            for (int c = 0; c < m.dim; ++c) m.weights(k, c) = row[c];
        }
        const auto bias = j.at("bias").get<std::vector<double>>();
        m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
        const auto& t = j.at("training");
        m.train.epochs = t.at("epochs");
        m.train.lr0 = t.at("lr0");
        m.train.lr_decay_epochs = t.at("lr_decay_epochs");
        m.train.batch_size = t.at("batch_size");
        m.train.standardize = t.at("standardize");
        m.seed = t.at("seed");
        m.final_loss = t.at("final_loss");
        m.loss_trace = t.at("loss_trace").get<std::vector<double>>();
        if (static_cast<int>(m.mean.size()) != m.dim || static_cast<int>(m.scale.size()) != m.dim ||
            m.bias.size() != m.n_classes) {
            throw FormatError(path.string() + ": inconsistent model dimensions");
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace brc
