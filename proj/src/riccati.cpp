#include "ftc/riccati.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace ftc::ss {

namespace {

// Solve the small Sylvester system  P Y + Y Q' + R = 0  (P, Q at most 2x2)
// by vectorizing:  (I (x) P + Q (x) I) vec(Y) = -vec(R).
Matrix small_sylvester(const Matrix& P, const Matrix& Q, const Matrix& R) {
    const int nr = static_cast<int>(P.rows()), nc = static_cast<int>(Q.rows());
    Matrix K = Matrix::Zero(nr * nc, nr * nc);
    // vec is column-major: Y(:,j) blocks.
    for (int j = 0; j < nc; ++j) {
        K.block(j * nr, j * nr, nr, nr) += P;
        for (int l = 0; l < nc; ++l) K.block(j * nr, l * nr, nr, nr) += Q(j, l) * Matrix::Identity(nr, nr);
    }
    Eigen::VectorXd rhs(nr * nc);
    for (int j = 0; j < nc; ++j) rhs.segment(j * nr, nr) = -R.col(j);
    Eigen::VectorXd y = K.fullPivLu().solve(rhs);
    Matrix Y(nr, nc);
    for (int j = 0; j < nc; ++j) Y.col(j) = y.segment(j * nr, nr);
    return Y;
}

// Partition sizes of the quasi-triangular Schur factor (1x1 / 2x2 blocks).
std::vector<int> schur_blocks(const Matrix& T) {
    std::vector<int> sizes;
    const int n = static_cast<int>(T.rows());
    int i = 0;
    while (i < n) {
        if (i + 1 < n && std::abs(T(i + 1, i)) > 0.0) {
            sizes.push_back(2);
            i += 2;
        } else {
            sizes.push_back(1);
            i += 1;
        }
    }
    return sizes;
}

double log_abs_det(const Matrix& M) {
    Eigen::PartialPivLU<Matrix> lu(M);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) acc += std::log(std::abs(lu.matrixLU()(i, i)));
    return acc;
}

// Diagonal similarity equalizing row and column norms (Osborne balancing,
// powers of two so the transform is exact in floating point).  Regularized
// synthesis plants spread the Hamiltonian block norms over many decades,
// which stalls the sign iteration; sign(H) = D sign(D^-1 H D) D^-1 recovers
// the original-coordinate result from the balanced one.
Vector balance_similarity(Matrix& H) {
    const int n = static_cast<int>(H.rows());
    Vector d = Vector::Ones(n);
    for (int sweep = 0; sweep < 16; ++sweep) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(H(j, i));
                r += std::abs(H(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0;
            while (c * f < r / f / 2.0) f *= 2.0;
            while (c * f >= r / f * 2.0) f /= 2.0;
            if (f != 1.0) {
                changed = true;
                d[i] *= f;
                H.col(i) *= f;
                H.row(i) /= f;
            }
        }
        if (!changed) break;
    }
    return d;
}

}  // namespace

Matrix lyap(const Matrix& A, const Matrix& Q) {
    if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows())
        throw ChannelMismatch("lyap: dimension mismatch");
    const int n = static_cast<int>(A.rows());
    if (n == 0) return Matrix(0, 0);

    Eigen::RealSchur<Matrix> schur(A);
    const Matrix U = schur.matrixU();
    const Matrix T = schur.matrixT();
    const Matrix Qs = U.transpose() * Q * U;

    // Solve T Y + Y T' + Qs = 0 block-wise, from the last block backwards.
    std::vector<int> sizes = schur_blocks(T);
    std::vector<int> offs(sizes.size());
    int at = 0;
    for (size_t k = 0; k < sizes.size(); ++k) {
        offs[k] = at;
        at += sizes[k];
    }
    const int nb = static_cast<int>(sizes.size());
    Matrix Y = Matrix::Zero(n, n);
    for (int i = nb - 1; i >= 0; --i) {
        for (int j = nb - 1; j >= 0; --j) {
            const int oi = offs[i], si = sizes[i], oj = offs[j], sj = sizes[j];
            Matrix R = Qs.block(oi, oj, si, sj);
            // Contributions from already-solved blocks to the right/below:
            //   sum_{k>i} T_ik Y_kj  and  sum_{l>j} Y_il (T_jl)'.
            for (int k = i + 1; k < nb; ++k)
                R += T.block(oi, offs[k], si, sizes[k]) * Y.block(offs[k], oj, sizes[k], sj);
            for (int l = j + 1; l < nb; ++l)
                R += Y.block(oi, offs[l], si, sizes[l]) * T.block(oj, offs[l], sj, sizes[l]).transpose();
            Y.block(oi, oj, si, sj) = small_sylvester(T.block(oi, oi, si, si), T.block(oj, oj, sj, sj), R);
        }
    }
    Matrix X = U * Y * U.transpose();
    return 0.5 * (X + X.transpose());
}

std::optional<Matrix> riccati_from_hamiltonian(const Matrix& H) {
    const int n2 = static_cast<int>(H.rows());
    if (n2 % 2 != 0 || H.cols() != n2) throw ChannelMismatch("riccati: Hamiltonian must be 2n x 2n");
    const int n = n2 / 2;

    // Scaled Newton iteration for the matrix sign function (determinant
    // scaling keeps the iterates balanced), run in balanced coordinates.
    Matrix Hb = H;
    const Vector bal = balance_similarity(Hb);
    Matrix Z = Hb;
    bool converged = false;
    for (int it = 0; it < 150; ++it) {
        Eigen::PartialPivLU<Matrix> lu(Z);
        const Matrix Zinv = lu.solve(Matrix::Identity(n2, n2));
        if (!Zinv.allFinite()) return std::nullopt;
        const double c = std::exp(-log_abs_det(Z) / n2);
        if (!std::isfinite(c) || c <= 0.0) return std::nullopt;
        const Matrix Znext = 0.5 * (c * Z + (1.0 / c) * Zinv);
        const double change = (Znext - Z).norm();
        Z = Znext;
        if (!Z.allFinite()) return std::nullopt;
        if (change <= 1e-13 * std::max(1.0, Z.norm())) {
            converged = true;
            break;
        }
    }
    if (!converged) return std::nullopt;
    // sign(H)^2 = I; a large defect signals eigenvalues near the axis.
    if ((Z * Z - Matrix::Identity(n2, n2)).norm() > 1e-4 * n2) return std::nullopt;
    Z = bal.asDiagonal() * Z * bal.cwiseInverse().asDiagonal();

    // Stable invariant subspace = range of (I - sign(H))/2.
    const Matrix P = 0.5 * (Matrix::Identity(n2, n2) - Z);
    Eigen::ColPivHouseholderQR<Matrix> qr(P);
    const Matrix Qfull = qr.householderQ();
    const Matrix U1 = Qfull.block(0, 0, n, n);
    const Matrix U2 = Qfull.block(n, 0, n, n);
    Eigen::FullPivLU<Matrix> lu1(U1);
    if (!lu1.isInvertible()) return std::nullopt;
    Matrix X = lu1.solve(Matrix::Identity(n, n)).transpose() * U2.transpose();
    X = 0.5 * (X + X.transpose()).eval();
    if (!X.allFinite()) return std::nullopt;

    // Newton polish: with F = H11, G = H12, S = -H21 the equation is
    // F'X + XF + XGX + S = 0; each step solves a Lyapunov equation in the
    // closed-loop matrix F + GX.
    const Matrix F = H.topLeftCorner(n, n);
    const Matrix G = H.topRightCorner(n, n);
    const Matrix S = -H.bottomLeftCorner(n, n);
    for (int it = 0; it < 3; ++it) {
        const Matrix R = F.transpose() * X + X * F + X * G * X + S;
        const double scale = 1.0 + X.norm();
        if (R.norm() <= 1e-13 * scale) break;
        const Matrix Fcl = F + G * X;
        if (spectral_abscissa(Fcl) >= 0.0) break;
        const Matrix Dx = lyap(Fcl.transpose(), R);
        if (!Dx.allFinite()) break;
        X = 0.5 * ((X + Dx) + (X + Dx).transpose()).eval();
    }
    if (spectral_abscissa(F + G * X) >= 0.0) return std::nullopt;
    return X;
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const int n = static_cast<int>(A.rows());
    if (B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != R.cols() ||
        R.rows() != B.cols())
        throw ChannelMismatch("solve_care: dimension mismatch");
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) throw NoStabilizingSolution("solve_care: R is not positive definite");
    const Matrix G = -B * llt.solve(B.transpose());
    Matrix H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = A;
    H.topRightCorner(n, n) = G;
    H.bottomLeftCorner(n, n) = -Q;
    H.bottomRightCorner(n, n) = -A.transpose();
    auto X = riccati_from_hamiltonian(H);
    if (!X) throw NoStabilizingSolution("solve_care: no stabilizing solution");
    return *X;
}

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& X) {
    const Matrix Res =
        A.transpose() * X + X * A - X * B * R.ldlt().solve(B.transpose()) * X + Q;
    return Res.norm() / (1.0 + X.norm());
}

}  // namespace ftc::ss
