#include "brc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "brc/errors.hpp"
#include "brc/rng.hpp"

namespace brc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Eigenvalues of the leading k x k block of H, sorted by decreasing
// modulus (conjugate pairs stay adjacent).
struct RitzSet {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
    std::vector<int> order;
};

RitzSet ritz(const MatrixXd& H, int k) {
    Eigen::EigenSolver<MatrixXd> es(H.topLeftCorner(k, k), true);
    if (es.info() != Eigen::Success) throw NumericError("spectral_radius: Hessenberg eigensolve failed");
    RitzSet r;
    r.values = es.eigenvalues();
    r.vectors = es.eigenvectors();
    r.order.resize(k);
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](int a, int b) { return std::abs(r.values[a]) > std::abs(r.values[b]); });
    return r;
}

// Implicit restart: filters the Arnoldi factorization with the unwanted Ritz
// values as exact shifts (real double shifts for conjugate pairs) and keeps
// the leading `keep` columns. Returns the new residual vector.
VectorXd implicit_restart(MatrixXd& V, MatrixXd& H, int m, int keep, double beta, const RitzSet& rs) {
    MatrixXd Hm = H.topLeftCorner(m, m);
    MatrixXd Q = MatrixXd::Identity(m, m);
    const MatrixXd I = MatrixXd::Identity(m, m);
    for (int idx = keep; idx < m; ++idx) {
        const std::complex<double> mu = rs.values[rs.order[idx]];
        MatrixXd M;
        if (mu.imag() == 0.0) {
            M = Hm - mu.real() * I;
        } else if (mu.imag() > 0.0) {
            M = Hm * Hm - 2.0 * mu.real() * Hm + std::norm(mu) * I;
        } else {
            continue;  // handled with its conjugate
        }
        Eigen::HouseholderQR<MatrixXd> qr(M);
        const MatrixXd Qi = qr.householderQ();
        Hm = Qi.transpose() * Hm * Qi;
        Q = Q * Qi;
    }
    for (int c = 0; c < m; ++c) {
        for (int r = c + 2; r < m; ++r) Hm(r, c) = 0.0;
    }
    const MatrixXd Vk = V.leftCols(m) * Q.leftCols(keep + 1);
    VectorXd f = Vk.col(keep) * Hm(keep, keep - 1) + V.col(m) * (beta * Q(m - 1, keep - 1));
    V.leftCols(keep) = Vk.leftCols(keep);
    H.setZero();
    H.topLeftCorner(keep, keep) = Hm.topLeftCorner(keep, keep);
    return f;
}

template <class Apply>
SpectralResult run(Eigen::Index n, Apply&& apply, const SpectralOptions& opt) {
    SpectralResult out;
    if (n == 0) {
        out.method = "invariant";
        return out;
    }
    if (opt.krylov_dim < 3 || opt.max_restarts < 1 || opt.wanted < 1) {
        throw ConfigError("spectral_radius: bad iteration budget");
    }

    Rng rng(opt.seed);
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    v.normalize();
    VectorXd w(n);

    for (int it = 0; it < opt.power_iters; ++it) {
        apply(v, w);
        ++out.matvecs;
        const double mu = v.dot(w);
        const double wn = w.norm();
        if (wn == 0.0) break;
        const double res = (w - mu * v).norm();
        if (mu != 0.0 && res <= opt.tol * std::abs(mu)) {
            out.radius = std::abs(mu);
            out.residual = res / std::abs(mu);
            out.method = "power";
            return out;
        }
        v = w / wn;
    }

    const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
    const int want = std::max(1, std::min(opt.wanted, m - 2));
    MatrixXd V(n, m + 1);
    MatrixXd H = MatrixXd::Zero(m + 1, m);
    V.col(0) = v;
    int k = 0;  // columns of V already satisfying the Arnoldi relation
    double last_residual = 0.0;
    for (int restart = 0; restart < opt.max_restarts; ++restart) {
        double beta = 0.0;
        const double hscale = std::max(H.topLeftCorner(m, m).norm(), 1e-300);
        for (int j = k; j < m; ++j) {
            apply(V.col(j), w);
            ++out.matvecs;
            for (int pass = 0; pass < 2; ++pass) {
                const VectorXd h = V.leftCols(j + 1).transpose() * w;
                w.noalias() -= V.leftCols(j + 1) * h;
                H.col(j).head(j + 1) += h;
            }
            beta = w.norm();
            const double scale = std::max(hscale, H.col(j).head(j + 1).norm());
            if (j + 1 == n || beta <= 1e-13 * scale) {
                // The Krylov space is invariant, so H's spectrum is exact.
                const RitzSet rs = ritz(H, j + 1);
                out.radius = std::abs(rs.values[rs.order.front()]);
                out.method = "invariant";
                return out;
            }
            H(j + 1, j) = beta;
            V.col(j + 1) = w / beta;
        }

        const RitzSet rs = ritz(H, m);
        const int top = rs.order.front();
        const double theta = std::abs(rs.values[top]);
        const double ylast = std::abs(rs.vectors(m - 1, top)) / rs.vectors.col(top).norm();
        last_residual = beta * ylast / std::max(theta, 1e-300);
        if (last_residual <= opt.tol) {
            out.radius = theta;
            out.residual = last_residual;
            out.method = "arnoldi";
            return out;
        }

        int keep = want;
        if (keep < m && rs.values[rs.order[keep - 1]].imag() != 0.0 &&
            std::abs(rs.values[rs.order[keep]] - std::conj(rs.values[rs.order[keep - 1]])) == 0.0) {
            ++keep;  // never split a conjugate pair
        }
        if (keep >= m - 1) keep = m - 2;
        VectorXd f = implicit_restart(V, H, m, keep, beta, rs);
        for (int pass = 0; pass < 2; ++pass) f -= V.leftCols(keep) * (V.leftCols(keep).transpose() * f);
        const double fn = f.norm();
        if (!(fn > 0.0) || !std::isfinite(fn)) {
            // Exact deflation of the kept block: restart fresh from noise.
            for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
            for (int pass = 0; pass < 2; ++pass) v -= V.leftCols(keep) * (V.leftCols(keep).transpose() * v);
            v.normalize();
            V.col(keep) = v;
        } else {
            V.col(keep) = f / fn;
            H(keep, keep - 1) = fn;
        }
        k = keep;
    }
    throw NumericError("spectral_radius did not converge after " + std::to_string(out.matvecs) +
                       " products (relative residual " + std::to_string(last_residual) + ")");
}

void check_input(Eigen::Index rows, Eigen::Index cols, bool finite) {
    if (rows != cols) throw DataError("spectral_radius needs a square matrix");
    if (!finite) throw DataError("spectral_radius: matrix has non-finite entries");
}

}  // namespace

SpectralResult spectral_radius_ex(const SparseMatrix& m, const SpectralOptions& opt) {
    bool finite = true;
    for (Eigen::Index i = 0; i < m.nonZeros(); ++i) finite = finite && std::isfinite(m.valuePtr()[i]);
    check_input(m.rows(), m.cols(), finite);
    return run(m.rows(), [&](const auto& x, VectorXd& y) { y.noalias() = m * x; }, opt);
}

SpectralResult spectral_radius_ex(const Eigen::MatrixXd& m, const SpectralOptions& opt) {
    check_input(m.rows(), m.cols(), m.allFinite());
    return run(m.rows(), [&](const auto& x, VectorXd& y) { y.noalias() = m * x; }, opt);
}

double spectral_radius(const SparseMatrix& m, const SpectralOptions& opt) { return spectral_radius_ex(m, opt).radius; }
double spectral_radius(const Eigen::MatrixXd& m, const SpectralOptions& opt) { return spectral_radius_ex(m, opt).radius; }

}  // namespace brc
