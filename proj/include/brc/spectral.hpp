#pragma once

// Largest eigenvalue magnitude of a real square matrix. Power iteration
// handles the easy case of a dominant real eigenvalue; otherwise an
// implicitly restarted Arnoldi process takes over, which also copes with
// complex-conjugate dominant pairs and nilpotent blocks.

#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace brc {

struct SpectralOptions {
    int power_iters = 100;
    int krylov_dim = 60;
    int wanted = 20;           // Ritz values kept across implicit restarts
    int max_restarts = 2000;
    double tol = 1e-10;        // relative residual |M y - theta y| / |theta|
    std::uint64_t seed = 0x5eed;
};

struct SpectralResult {
    double radius = 0.0;
    double residual = 0.0;     // relative residual of the returned Ritz pair
    int matvecs = 0;
    std::string method;        // "power", "arnoldi" or "invariant"
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Throws NumericError (with the last residual) if the iteration budget runs
/// out, DataError for non-square or non-finite input.
SpectralResult spectral_radius_ex(const SparseMatrix& m, const SpectralOptions& opt = {});
SpectralResult spectral_radius_ex(const Eigen::MatrixXd& m, const SpectralOptions& opt = {});

double spectral_radius(const SparseMatrix& m, const SpectralOptions& opt = {});
double spectral_radius(const Eigen::MatrixXd& m, const SpectralOptions& opt = {});

}  // namespace brc
