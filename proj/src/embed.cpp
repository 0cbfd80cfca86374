#include "brc/embed.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "brc/errors.hpp"

namespace brc {

Embedding pca_embed(const std::vector<std::vector<double>>& X, int dims) {
    if (dims < 1) throw ConfigError("pca_embed: dims must be >= 1");
    const auto n = static_cast<Eigen::Index>(X.size());
    if (n < dims + 1) {
        throw DataError("pca_embed needs at least " + std::to_string(dims + 1) + " samples, got " + std::to_string(n));
    }
    const auto d = static_cast<Eigen::Index>(X.front().size());
    Eigen::MatrixXd A(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(X[i].size()) != d) throw DataError("pca_embed: ragged input rows");
        for (Eigen::Index j = 0; j < d; ++j) A(i, j) = X[i][j];
    }
    if (!A.allFinite()) throw DataError("pca_embed: non-finite input");
    A.rowwise() -= A.colwise().mean();

    // Eigen-decompose whichever of the Gram and covariance matrices is smaller.
    const bool gram = n <= d;
    const Eigen::MatrixXd S = gram ? Eigen::MatrixXd(A * A.transpose()) : Eigen::MatrixXd(A.transpose() * A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericError("pca_embed: eigensolver failed");

    Embedding e;
    e.coords = Eigen::MatrixXd::Zero(n, dims);
    e.loadings = Eigen::MatrixXd::Zero(d, dims);
    const double total = S.trace();
    const Eigen::Index m = S.rows();
    const double top = std::max(es.eigenvalues()[m - 1], 0.0);
    for (int k = 0; k < dims && k < m; ++k) {
        const double lambda = es.eigenvalues()[m - 1 - k];
        if (!(lambda > 1e-12 * top) || top == 0.0) break;
        Eigen::VectorXd v = gram ? Eigen::VectorXd(A.transpose() * es.eigenvectors().col(m - 1 - k))
                                 : Eigen::VectorXd(es.eigenvectors().col(m - 1 - k));
        v.normalize();
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        e.loadings.col(k) = v;
        e.coords.col(k) = A * v;
        e.variance.push_back(lambda / static_cast<double>(n - 1));
        e.variance_ratio.push_back(total > 0 ? lambda / total : 0.0);
        ++e.n_components;
    }
    if (e.n_components < dims) {
        e.warnings.push_back("degenerate covariance: only " + std::to_string(e.n_components) + " of " +
                             std::to_string(dims) + " components have non-zero variance");
    }
    return e;
}

}  // namespace brc
