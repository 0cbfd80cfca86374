#pragma once

// Principal-component projection of state matrices for 2-D plots.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace brc {

struct Embedding {
    Eigen::MatrixXd coords;            // n_samples x dims; missing components are zero
    Eigen::MatrixXd loadings;          // n_features x dims, unit columns
    std::vector<double> variance;      // per returned component
    std::vector<double> variance_ratio;
    int n_components = 0;              // components with non-negligible variance
    std::vector<std::string> warnings;
};

/// Mean-centred PCA, components by descending variance, each sign chosen so
/// the largest-magnitude loading is positive. Needs at least dims + 1 rows.
Embedding pca_embed(const std::vector<std::vector<double>>& X, int dims = 2);

}  // namespace brc
