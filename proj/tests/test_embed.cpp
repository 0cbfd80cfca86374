#include <doctest.h>

#include <cmath>

#include "brc/embed.hpp"
#include "brc/errors.hpp"
#include "brc/rng.hpp"

using namespace brc;

namespace {

// Mean silhouette of a labelled 2-D embedding, computed pairwise.
double silhouette(const Eigen::MatrixXd& Y, const std::vector<int>& lab, int k) {
    const auto n = Y.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        std::vector<int> cnt(static_cast<std::size_t>(k), 0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[static_cast<std::size_t>(lab[j])] += (Y.row(i) - Y.row(j)).norm();
            cnt[static_cast<std::size_t>(lab[j])]++;
        }
        const double a = sum[static_cast<std::size_t>(lab[i])] / cnt[static_cast<std::size_t>(lab[i])];
        double b = 1e300;
        for (int c = 0; c < k; ++c) {
            if (c != lab[i]) b = std::min(b, sum[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)]);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("points on a line give one component") {
    std::vector<std::vector<double>> X;
    for (int i = 0; i < 10; ++i) X.push_back({1.0 * i, 2.0 * i, 0.0});
    const auto e = pca_embed(X, 2);
    CHECK(e.n_components == 1);
    CHECK_FALSE(e.warnings.empty());
    CHECK(e.variance_ratio[0] == doctest::Approx(1.0));
    CHECK(e.loadings(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)));
    CHECK(e.loadings(1, 0) == doctest::Approx(2.0 / std::sqrt(5.0)));
    for (int i = 0; i < 10; ++i) CHECK(e.coords(i, 1) == 0.0);
    CHECK(e.coords(9, 0) - e.coords(0, 0) == doctest::Approx(9.0 * std::sqrt(5.0)));
}

TEST_CASE("known variances on axis-aligned data") {
    std::vector<std::vector<double>> X{{2, 0, 0}, {-2, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    const auto e = pca_embed(X, 2);
    CHECK(e.n_components == 2);
    CHECK(e.variance[0] == doctest::Approx(8.0 / 3.0));
    CHECK(e.variance[1] == doctest::Approx(2.0 / 3.0));
    CHECK(e.variance_ratio[0] == doctest::Approx(0.8));
    CHECK(e.warnings.empty());
}

TEST_CASE("separated clusters stay separated") {
    Rng rng(4);
    std::vector<std::vector<double>> X;
    std::vector<int> lab;
    for (int c = 0; c < 4; ++c) {
        std::vector<double> center(50);
        for (auto& v : center) v = rng.normal(0, 10);
        for (int i = 0; i < 25; ++i) {
            auto x = center;
            for (auto& v : x) v += rng.normal();
            X.push_back(x);
            lab.push_back(c);
        }
    }
    const auto e = pca_embed(X, 2);
    CHECK(silhouette(e.coords, lab, 4) > 0.8);
}

TEST_CASE("translation invariance, sign convention and both solver paths") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(30));
        const int d = 2 + static_cast<int>(rng.below(30));
        std::vector<std::vector<double>> X(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
        for (auto& r : X) {
            for (auto& v : r) v = rng.normal();
        }
        auto shifted = X;
        for (auto& r : shifted) {
            for (int j = 0; j < d; ++j) r[static_cast<std::size_t>(j)] += 100.0 * j;
        }
        const auto a = pca_embed(X, 2);
        const auto b = pca_embed(shifted, 2);
        CHECK((a.coords - b.coords).cwiseAbs().maxCoeff() < 1e-8);
        for (int k = 0; k < a.n_components; ++k) {
            Eigen::Index arg;
            a.loadings.col(k).cwiseAbs().maxCoeff(&arg);
            CHECK(a.loadings(arg, k) > 0.0);
            CHECK(a.loadings.col(k).norm() == doctest::Approx(1.0));
            CHECK(a.coords.col(k).mean() == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
        }
        if (a.n_components == 2) CHECK(a.variance[0] >= a.variance[1]);
    }
}

TEST_CASE("embedding errors") {
    CHECK_THROWS_AS(pca_embed({{1.0, 2.0}, {3.0, 4.0}}, 2), DataError);
    CHECK_THROWS_AS(pca_embed({{1.0}, {2.0, 3.0}, {4.0}}, 1), DataError);
    CHECK_THROWS_AS(pca_embed({{1.0}, {2.0}}, 0), ConfigError);
    const auto flat = pca_embed({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}, 2);
    CHECK(flat.n_components == 0);
    CHECK_FALSE(flat.warnings.empty());
}
