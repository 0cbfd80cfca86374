#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brc/errors.hpp"
#include "brc/readout.hpp"
#include "brc/rng.hpp"
#include "support.hpp"

using namespace brc;

namespace {

LabeledDataset clusters(int n_per_class, int n_classes, int dim, double spread, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset ds;
    for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(n_classes), std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& ctr : centers) {
        for (auto& v : ctr) v = rng.normal(0.0, 3.0);
    }
    for (int c = 0; c < n_classes; ++c) {
        for (int i = 0; i < n_per_class; ++i) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] = centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] + rng.normal(0.0, spread);
            ds.features.push_back(x);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

// Sparse non-negative counts, like electrode states, with a few constant columns.
LabeledDataset count_data(int n, int n_classes, int dim, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset ds;
    for (int c = 0; c < n_classes; ++c) ds.class_names.push_back(std::to_string(c));
    for (int i = 0; i < n; ++i) {
        const int y = i % n_classes;
        std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
        for (int j = 2; j < dim; ++j) {
            const double rate = (j % n_classes == y) ? 1.5 : 0.2;
            x[static_cast<std::size_t>(j)] = static_cast<double>(rng.poisson(rate));
        }
        x[1] = 3.0;  // constant feature
        ds.features.push_back(x);
        ds.labels.push_back(y);
    }
    return ds;
}

// Dense mini-batch SGD on standardized features, written directly from the
// update rule. Must reproduce the sparse trainer's iterates.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> dense_sgd(const LabeledDataset& ds, const TrainConfig& cfg,
                                                      std::uint64_t seed) {
    const int n = static_cast<int>(ds.size());
    const int d = ds.dim();
    const int C = ds.n_classes();
    Eigen::MatrixXd Z(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) Z(i, j) = ds.features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    if (cfg.standardize) {
        for (int j = 0; j < d; ++j) {
            const double mu = Z.col(j).mean();
            const double sd = std::sqrt((Z.col(j).array() - mu).square().mean());
            Z.col(j) = sd > 0 ? Eigen::VectorXd((Z.col(j).array() - mu) / sd) : Eigen::VectorXd::Zero(n);
        }
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(C, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(C);
    Rng rng(substream(seed, "sgd"));
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        const double lr = cfg.lr0 / (1.0 + epoch / cfg.lr_decay_epochs);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            Eigen::MatrixXd gW = Eigen::MatrixXd::Zero(C, d);
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(C);
            for (int bi = start; bi < stop; ++bi) {
                const auto i = static_cast<Eigen::Index>(order[static_cast<std::size_t>(bi)]);
                Eigen::VectorXd s = W * Z.row(i).transpose() + b;
                Eigen::VectorXd p = (s.array() - s.maxCoeff()).exp();
                p /= p.sum();
                p[ds.labels[static_cast<std::size_t>(i)]] -= 1.0;
                gW += p * Z.row(i);
                gb += p;
            }
            W -= lr / (stop - start) * gW;
            b -= lr / (stop - start) * gb;
        }
    }
    return {W, b};
}

}  // namespace

TEST_CASE("softmax") {
    const auto p = softmax(std::vector<double>{0.0, std::log(2.0)});
    CHECK(p[0] == doctest::Approx(1.0 / 3.0));
    CHECK(p[1] == doctest::Approx(2.0 / 3.0));
    const auto big = softmax(std::vector<double>{1000.0, 1001.0, -1e9});
    CHECK(std::isfinite(big[0]));
    CHECK(big[1] / big[0] == doctest::Approx(std::exp(1.0)));
    CHECK(big[2] == 0.0);
    Rng rng(2);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> s(1 + rng.below(12));
        for (auto& v : s) v = rng.normal(0, 20);
        const auto a = softmax(s);
        CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0));
        for (auto& v : s) v += 37.5;
        const auto b = softmax(s);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]));
    }
}

TEST_CASE("cross-entropy gradient matches central differences") {
    Rng rng(5);
    const int C = 4, d = 6, n = 15;
    Eigen::MatrixXd W(C, d), X(n, d);
    Eigen::VectorXd b(C);
    for (int i = 0; i < C * d; ++i) W.data()[i] = rng.normal();
    for (int i = 0; i < n * d; ++i) X.data()[i] = rng.normal();
    for (int i = 0; i < C; ++i) b[i] = rng.normal();
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(C));
    Eigen::MatrixXd gW;
    Eigen::VectorXd gb;
    cross_entropy(W, b, X, y, &gW, &gb);
    const double h = 1e-6;
    for (int i = 0; i < C; ++i) {
        for (int j = 0; j < d; ++j) {
            auto Wp = W, Wm = W;
            Wp(i, j) += h;
            Wm(i, j) -= h;
            const double num = (cross_entropy(Wp, b, X, y) - cross_entropy(Wm, b, X, y)) / (2 * h);
            CHECK(gW(i, j) == doctest::Approx(num).epsilon(1e-6));
        }
        auto bp = b, bm = b;
        bp[i] += h;
        bm[i] -= h;
        CHECK(gb[i] == doctest::Approx((cross_entropy(W, bp, X, y) - cross_entropy(W, bm, X, y)) / (2 * h)).epsilon(1e-6));
    }
    // Uniform scores give log C.
    CHECK(cross_entropy(Eigen::MatrixXd::Zero(C, d), Eigen::VectorXd::Zero(C), X, y) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("sparse trainer reproduces dense SGD") {
    for (bool standardize : {true, false}) {
        const auto ds = count_data(53, 3, 12, 17);
        TrainConfig cfg;
        cfg.epochs = 30;
        cfg.lr0 = 0.05;
        cfg.lr_decay_epochs = 10;
        cfg.standardize = standardize;
        const auto m = train_slp(ds, cfg, 99);
        const auto [W, b] = dense_sgd(ds, cfg, 99);
        const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
        CHECK((m.weights - W).cwiseAbs().maxCoeff() <= 1e-9 * scale);
        CHECK((m.bias - b).cwiseAbs().maxCoeff() <= 1e-9 * scale);
        if (standardize) CHECK(m.weights.col(1).isZero());
        CHECK(m.loss_trace.size() == 30u);
    }
}

TEST_CASE("training is deterministic and reduces the loss") {
    const auto ds = clusters(20, 3, 5, 1.0, 3);
    TrainConfig cfg;
    cfg.epochs = 200;
    const auto a = train_slp(ds, cfg, 1);
    const auto b = train_slp(ds, cfg, 1);
    CHECK(a == b);
    CHECK(a.final_loss < a.loss_trace.front());
    CHECK(a.final_loss < std::log(3.0));
}

TEST_CASE("separable clusters are learned and random labels are not") {
    const auto sep = clusters(25, 4, 10, 0.5, 8);
    CHECK(cross_validate(sep, 5, TrainConfig{}, 3).mean == doctest::Approx(1.0));

    auto noise = clusters(100, 4, 20, 1.0, 9);
    Rng rng(10);
    for (auto& x : noise.features) {
        for (auto& v : x) v = rng.normal();
    }
    const auto cv = cross_validate(noise, 5, TrainConfig{}, 3);
    CHECK(std::abs(cv.mean - 0.25) < 0.1);
}

TEST_CASE("stratified folds") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const int C = 2 + static_cast<int>(rng.below(9));
        const int k = 2 + static_cast<int>(rng.below(5));
        std::vector<int> labels;
        for (int c = 0; c < C; ++c) {
            const int m = k + static_cast<int>(rng.below(20));
            labels.insert(labels.end(), static_cast<std::size_t>(m), c);
        }
        std::shuffle(labels.begin(), labels.end(), rng.engine());
        const auto f = stratified_folds(labels, C, k, trial);
        CHECK(f == stratified_folds(labels, C, k, trial));
        std::vector<std::vector<int>> per(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(C), 0));
        std::vector<int> size(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            REQUIRE(f[i] >= 0);
            REQUIRE(f[i] < k);
            per[static_cast<std::size_t>(f[i])][static_cast<std::size_t>(labels[i])]++;
            size[static_cast<std::size_t>(f[i])]++;
        }
        CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
        for (int c = 0; c < C; ++c) {
            int lo = 1 << 30, hi = 0;
            for (int g = 0; g < k; ++g) {
                lo = std::min(lo, per[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)]);
                hi = std::max(hi, per[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)]);
            }
            CHECK(hi - lo <= 1);
            CHECK(lo >= 1);
        }
    }
    const std::vector<int> small{0, 0, 0, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(stratified_folds(small, 2, 4, 1), ProtocolError);
    CHECK_THROWS_AS(stratified_folds(small, 2, 1, 1), ProtocolError);
}

TEST_CASE("cross-validation bookkeeping and thread independence") {
    const auto ds = clusters(12, 3, 6, 2.0, 21);
    TrainConfig cfg;
    cfg.epochs = 100;
    const auto a = cross_validate(ds, 4, cfg, 5, 1);
    const auto b = cross_validate(ds, 4, cfg, 5, 3);
    CHECK(a.fold_accuracy == b.fold_accuracy);
    CHECK(a.confusion == b.confusion);
    CHECK(a.k == 4);
    CHECK(a.fold_accuracy.size() == 4u);
    int total = 0;
    for (const auto& row : a.confusion) total += std::accumulate(row.begin(), row.end(), 0);
    CHECK(total == 36);
    CHECK(a.per_class_count == std::vector<int>{12, 12, 12});
    CHECK(a.mean == doctest::Approx(std::accumulate(a.fold_accuracy.begin(), a.fold_accuracy.end(), 0.0) / 4));
}

TEST_CASE("shuffle baseline permutes within each sample") {
    const auto ds = count_data(40, 4, 30, 4);
    const auto sh = shuffle_baseline(ds, 7);
    CHECK(sh.labels == ds.labels);
    CHECK(sh.features.size() == ds.features.size());
    bool moved = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto a = ds.features[i], b = sh.features[i];
        moved |= a != b;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        REQUIRE(a == b);
    }
    CHECK(moved);
    CHECK(shuffle_baseline(ds, 7).features == sh.features);
    CHECK_FALSE(shuffle_baseline(ds, 8).features == sh.features);
}

TEST_CASE("readout errors") {
    auto ds = clusters(5, 2, 3, 1.0, 1);
    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(train_slp(ds, bad, 1), ConfigError);
    auto one = ds;
    std::fill(one.labels.begin(), one.labels.end(), 0);
    CHECK_THROWS_AS(train_slp(one, TrainConfig{}, 1), TrainingError);
    auto ragged = ds;
    ragged.features[2].push_back(1.0);
    CHECK_THROWS_AS(train_slp(ragged, TrainConfig{}, 1), DataError);
    auto nan = ds;
    nan.features[0][0] = std::nan("");
    CHECK_THROWS_AS(nan.validate(), DataError);
    const auto m = train_slp(ds, TrainConfig{}, 1);
    CHECK_THROWS_AS(predict(m, std::vector<double>{1.0}), DataError);
}

TEST_CASE("model save and load") {
    testing::TempDir dir;
    const auto ds = clusters(10, 3, 4, 1.0, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    const auto m = train_slp(ds, cfg, 3);
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.mean == m.mean);
    CHECK(back.scale == m.scale);
    CHECK(back.class_names == m.class_names);
    for (const auto& x : ds.features) CHECK(predict(back, x).scores == predict(m, x).scores);
    CHECK(evaluate(back, ds).mean == evaluate(m, ds).mean);
    testing::write_bytes(dir / "bad.json", {'{', '}'});
    CHECK_THROWS_AS(load_model(dir / "bad.json"), FormatError);
}
