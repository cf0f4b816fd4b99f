#include "ftc/reduction.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "ftc/riccati.hpp"

namespace ftc::ss {

namespace {

// Symmetric PSD square-root factor F with  M ~= F F'  (negative eigenvalue
// dust from the Lyapunov solve is clamped).
Matrix psd_factor(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    Vector lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace

TruncationResult balanced_truncate(const StateSpace& g, int r) {
    g.validate();
    if (!is_stable(g)) throw UnstableInput("balanced_truncate: system must be stable");
    const int n = g.n();
    TruncationResult out;
    if (n == 0 || r >= n) {
        out.sys = g;
        out.hankel = Vector::Zero(n);
        if (n > 0) {
            const Matrix P = lyap(g.A, g.B * g.B.transpose());
            const Matrix Q = lyap(g.A.transpose(), g.C.transpose() * g.C);
            Eigen::JacobiSVD<Matrix> svd(psd_factor(Q).transpose() * psd_factor(P));
            out.hankel = svd.singularValues();
        }
        out.error_bound = 0.0;
        return out;
    }
    if (r < 0) r = 0;

    const Matrix P = lyap(g.A, g.B * g.B.transpose());
    const Matrix Q = lyap(g.A.transpose(), g.C.transpose() * g.C);
    const Matrix Rp = psd_factor(P);
    const Matrix Rq = psd_factor(Q);

    Eigen::JacobiSVD<Matrix> svd(Rq.transpose() * Rp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector sigma = svd.singularValues();
    out.hankel = sigma;

    // States with numerically zero Hankel value cannot be balanced; keep at
    // most the numerical rank.
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > 1e-13 * std::max(1.0, sigma(0))) ++rank;
    const int keep = std::min(r, rank);

    // Balancing projection: T = Rp V S^-1/2, Ti = S^-1/2 U' Rq'.
    const Vector shalf = sigma.head(keep).cwiseSqrt().cwiseInverse();
    const Matrix T = Rp * svd.matrixV().leftCols(keep) * shalf.asDiagonal();
    const Matrix Ti = shalf.asDiagonal() * svd.matrixU().leftCols(keep).transpose() * Rq.transpose();

    out.sys.A = Ti * g.A * T;
    out.sys.B = Ti * g.B;
    out.sys.C = g.C * T;
    out.sys.D = g.D;
    out.sys.inputs = g.inputs;
    out.sys.outputs = g.outputs;
    out.error_bound = 2.0 * sigma.tail(n - keep).sum();
    return out;
}

}  // namespace ftc::ss
