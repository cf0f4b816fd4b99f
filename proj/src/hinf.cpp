#include "ftc/hinf.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>

#include "ftc/riccati.hpp"

namespace ftc::ss {

namespace {

// True when the Hamiltonian test matrix for level gamma has an eigenvalue on
// the imaginary axis, i.e. sup sigma_max(G(jw)) >= gamma.
bool gamma_level_crossed(const StateSpace& g, double gamma) {
    const int n = g.n(), m = g.m(), p = g.p();
    const Matrix R = gamma * gamma * Matrix::Identity(m, m) - g.D.transpose() * g.D;
    Eigen::LDLT<Matrix> ldlt(R);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
        return true;  // gamma <= sigma_max(D)
    const Matrix RinvDt = ldlt.solve(g.D.transpose());
    const Matrix As = g.A + g.B * RinvDt * g.C;
    Matrix M(2 * n, 2 * n);
    M.topLeftCorner(n, n) = As;
    M.topRightCorner(n, n) = g.B * ldlt.solve(g.B.transpose());
    M.bottomLeftCorner(n, n) =
        -g.C.transpose() * (Matrix::Identity(p, p) + g.D * RinvDt) * g.C;
    M.bottomRightCorner(n, n) = -As.transpose();
    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev.real()) <= 1e-8 * std::max(1.0, std::abs(ev))) return true;
    }
    return false;
}

}  // namespace

double hinf_norm(const StateSpace& g, double rel_tol) {
    g.validate();
    if (g.p() == 0 || g.m() == 0) return 0.0;
    if (g.n() == 0) {
        Eigen::JacobiSVD<Matrix> svd(g.D);
        return svd.singularValues()(0);
    }
    if (!is_stable(g)) throw UnstableInput("hinf_norm: system is unstable");

    // Lower bound from the feedthrough, DC, and a frequency sweep anchored at
    // the magnitudes of the poles.
    double lo = 0.0;
    {
        Eigen::JacobiSVD<Matrix> svd(g.D);
        lo = svd.singularValues()(0);
    }
    lo = std::max(lo, sigma_max(g, 0.0));
    const auto evs = g.A.eigenvalues();
    double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
    for (Eigen::Index i = 0; i < evs.size(); ++i) {
        const double m = std::abs(evs(i));
        if (m > 1e-12) {
            wmin = std::min(wmin, m);
            wmax = std::max(wmax, m);
        }
    }
    if (!(wmax > 0.0)) {
        wmin = 1e-2;
        wmax = 1e2;
    }
    for (double w : log_grid(wmin / 10.0, wmax * 10.0, 25)) lo = std::max(lo, sigma_max(g, w));

    if (lo == 0.0) {
        // No response anywhere sampled; accept zero if even a tiny level is clear.
        if (!gamma_level_crossed(g, 1e-12)) return 0.0;
        lo = 1e-12;
    }

    double hi = lo * (1.0 + 1e-3);
    int guard = 0;
    while (gamma_level_crossed(g, hi)) {
        hi *= 2.0;
        if (++guard > 80) throw IllPosed("hinf_norm: bisection failed to bracket");
    }
    double lo2 = lo;
    while (hi - lo2 > rel_tol * lo2) {
        const double mid = std::sqrt(hi * lo2);
        if (gamma_level_crossed(g, mid))
            lo2 = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo2 + hi);
}

void GeneralizedPlant::validate() const {
    sys.validate();
    if (nw < 0 || nu < 0 || nz < 0 || ny < 0 || nw + nu != sys.m() || nz + ny != sys.p())
        throw ChannelMismatch("generalized plant: partition sizes disagree with system");
}

StateSpace lft_close(const GeneralizedPlant& g, const StateSpace& k) {
    g.validate();
    k.validate();
    if (k.m() != g.ny || k.p() != g.nu)
        throw ChannelMismatch("lft_close: controller dimensions disagree with plant partition");
    const Matrix A = g.sys.A, B1 = g.B1(), B2 = g.B2(), C1 = g.C1(), C2 = g.C2();
    const Matrix D11 = g.D11(), D12 = g.D12(), D21 = g.D21(), D22 = g.D22();
    const Matrix Et = Matrix::Identity(k.p(), k.p()) - k.D * D22;
    Eigen::FullPivLU<Matrix> lu(Et);
    if (!lu.isInvertible()) throw IllPosed("lft_close: algebraic loop I - DK D22 is singular");
    const Matrix E = lu.inverse();                                   // (I - DK D22)^-1
    const Matrix F = Matrix::Identity(g.ny, g.ny) + D22 * E * k.D;   // (I - D22 DK)^-1
    const int n = g.sys.n(), nk = k.n();
    StateSpace cl;
    cl.A.setZero(n + nk, n + nk);
    cl.A.topLeftCorner(n, n) = A + B2 * E * k.D * C2;
    cl.A.topRightCorner(n, nk) = B2 * E * k.C;
    cl.A.bottomLeftCorner(nk, n) = k.B * F * C2;
    cl.A.bottomRightCorner(nk, nk) = k.A + k.B * D22 * E * k.C;
    cl.B.resize(n + nk, g.nw);
    cl.B.topRows(n) = B1 + B2 * E * k.D * D21;
    cl.B.bottomRows(nk) = k.B * F * D21;
    cl.C.resize(g.nz, n + nk);
    cl.C.leftCols(n) = C1 + D12 * E * k.D * C2;
    cl.C.rightCols(nk) = D12 * E * k.C;
    cl.D = D11 + D12 * E * k.D * D21;
    return cl;
}

namespace {

int matrix_rank(const Matrix& M, double tol_factor = 1e-9) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(M);
    const double thresh = tol_factor * std::max(1.0, svd.singularValues()(0));
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > thresh) ++r;
    return r;
}

// Synthesis-ready plant: D22 = 0, D11 = 0 (w filtered when needed), D12 full
// column rank and D21 full row rank (epsilon blocks appended when needed).
GeneralizedPlant prepare_plant(const GeneralizedPlant& g, const HinfOptions& opt) {
    Matrix A = g.sys.A, B1 = g.B1(), B2 = g.B2();
    Matrix C1 = g.C1(), C2 = g.C2();
    Matrix D11 = g.D11(), D12 = g.D12(), D21 = g.D21();
    const int nu = g.nu, ny = g.ny;
    int n = static_cast<int>(A.rows()), nw = g.nw, nz = g.nz;

    if (D11.norm() > 0.0) {
        // Insert a first-order low-pass (corner well above all plant dynamics)
        // on every w channel; the filtered plant has no w -> z feedthrough.
        const double wf = opt.w_filter_freq;
        Matrix A2 = Matrix::Zero(n + nw, n + nw);
        A2.topLeftCorner(n, n) = A;
        A2.topRightCorner(n, nw) = B1;
        A2.bottomRightCorner(nw, nw) = -wf * Matrix::Identity(nw, nw);
        Matrix B1n = Matrix::Zero(n + nw, nw);
        B1n.bottomRows(nw) = wf * Matrix::Identity(nw, nw);
        Matrix B2n = Matrix::Zero(n + nw, nu);
        B2n.topRows(n) = B2;
        Matrix C1n(nz, n + nw), C2n(ny, n + nw);
        C1n << C1, D11;
        C2n << C2, D21;
        A = A2;
        B1 = B1n;
        B2 = B2n;
        C1 = C1n;
        C2 = C2n;
        D11 = Matrix::Zero(nz, nw);
        D21 = Matrix::Zero(ny, nw);
        n += nw;
    }
    if (matrix_rank(D12) < nu) {
        // Append z rows  eps * u  so the control weight is nonsingular.
        Matrix C1n(nz + nu, n), D11n(nz + nu, nw), D12n(nz + nu, nu);
        C1n << C1, Matrix::Zero(nu, n);
        D11n << D11, Matrix::Zero(nu, nw);
        D12n << D12, opt.reg_eps * Matrix::Identity(nu, nu);
        C1 = C1n;
        D11 = D11n;
        D12 = D12n;
        nz += nu;
    }
    if (matrix_rank(D21) < ny) {
        // Append w columns feeding y directly (measurement-noise block).
        Matrix B1n(n, nw + ny), D11n(nz, nw + ny), D21n(ny, nw + ny);
        B1n << B1, Matrix::Zero(n, ny);
        D11n << D11, Matrix::Zero(nz, ny);
        D21n << D21, opt.reg_eps * Matrix::Identity(ny, ny);
        B1 = B1n;
        D11 = D11n;
        D21 = D21n;
        nw += ny;
    }

    GeneralizedPlant out;
    out.nw = nw;
    out.nu = nu;
    out.nz = nz;
    out.ny = ny;
    out.sys.A = A;
    out.sys.B.resize(n, nw + nu);
    out.sys.B << B1, B2;
    out.sys.C.resize(nz + ny, n);
    out.sys.C << C1, C2;
    out.sys.D.setZero(nz + ny, nw + nu);
    out.sys.D.topLeftCorner(nz, nw) = D11;
    out.sys.D.topRightCorner(nz, nu) = D12;
    out.sys.D.bottomLeftCorner(ny, nw) = D21;
    out.validate();
    return out;
}

bool is_psd(const Matrix& X) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-8 * (1.0 + X.norm());
}

// Central-controller construction at a fixed level; the plant must have
// D11 = 0, D22 = 0, D12'D12 > 0, D21 D21' > 0.
std::optional<StateSpace> central_controller(const GeneralizedPlant& g, double gamma) {
    const Matrix A = g.sys.A, B1 = g.B1(), B2 = g.B2(), C1 = g.C1(), C2 = g.C2();
    const Matrix D12 = g.D12(), D21 = g.D21();
    const int n = static_cast<int>(A.rows());
    const double gi2 = 1.0 / (gamma * gamma);

    const Matrix R1 = D12.transpose() * D12;
    const Matrix R2 = D21 * D21.transpose();
    Eigen::LLT<Matrix> llt1(R1), llt2(R2);
    if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) return std::nullopt;
    const Matrix R1iD12t = llt1.solve(D12.transpose());
    const Matrix R2iD21 = llt2.solve(D21);

    // State-feedback Riccati with the D12'C1 cross term folded in.
    const Matrix Ax = A - B2 * R1iD12t * C1;
    const Matrix Qx = C1.transpose() * C1 - C1.transpose() * D12 * R1iD12t * C1;
    Matrix HX(2 * n, 2 * n);
    HX.topLeftCorner(n, n) = Ax;
    HX.topRightCorner(n, n) = gi2 * B1 * B1.transpose() - B2 * llt1.solve(B2.transpose());
    HX.bottomLeftCorner(n, n) = -Qx;
    HX.bottomRightCorner(n, n) = -Ax.transpose();
    auto Xopt = riccati_from_hamiltonian(HX);
    if (!Xopt || !is_psd(*Xopt)) return std::nullopt;
    const Matrix& X = *Xopt;

    // Output-injection Riccati with the B1 D21' cross term folded in.
    const Matrix R2iC2 = llt2.solve(C2);
    const Matrix Ay = A - B1 * D21.transpose() * R2iC2;
    const Matrix Qy = B1 * B1.transpose() - B1 * D21.transpose() * R2iD21 * B1.transpose();
    Matrix HY(2 * n, 2 * n);
    HY.topLeftCorner(n, n) = Ay.transpose();
    HY.topRightCorner(n, n) = gi2 * C1.transpose() * C1 - C2.transpose() * llt2.solve(C2);
    HY.bottomLeftCorner(n, n) = -Qy;
    HY.bottomRightCorner(n, n) = -Ay;
    auto Yopt = riccati_from_hamiltonian(HY);
    if (!Yopt || !is_psd(*Yopt)) return std::nullopt;
    const Matrix& Y = *Yopt;

    // Coupling condition rho(XY) < gamma^2.
    const double rho = (X * Y).eigenvalues().real().maxCoeff();
    if (!(rho < gamma * gamma * (1.0 - 1e-9))) return std::nullopt;

    const Matrix Fc = -llt1.solve(B2.transpose() * X + D12.transpose() * C1);
    const Matrix Lc = -(Y * C2.transpose() + B1 * D21.transpose()) * llt2.solve(Matrix::Identity(g.ny, g.ny));
    const Matrix Zl = Matrix::Identity(n, n) - gi2 * Y * X;
    Eigen::FullPivLU<Matrix> luz(Zl);
    if (!luz.isInvertible()) return std::nullopt;
    const Matrix ZL = luz.inverse() * Lc;

    StateSpace K;
    K.A = A + gi2 * B1 * B1.transpose() * X + B2 * Fc + ZL * (C2 + gi2 * D21 * B1.transpose() * X);
    K.B = -ZL;
    K.C = Fc;
    K.D = Matrix::Zero(g.nu, g.ny);
    if (!K.A.allFinite()) return std::nullopt;
    return K;
}

}  // namespace

HinfResult hinf_synthesize(const GeneralizedPlant& g, const HinfOptions& opt) {
    g.validate();
    if (g.nu == 0 || g.ny == 0) throw NotSynthesizable("hinf_synthesize: no control or measurement channel");

    // Pull D22 out; the synthesis runs on the D22-free plant and the loop is
    // restored around the resulting controller afterwards.
    const Matrix D22 = g.D22();
    GeneralizedPlant g0 = g;
    g0.sys.D.bottomRightCorner(g.ny, g.nu).setZero();
    const GeneralizedPlant gs = prepare_plant(g0, opt);

    auto wrap_d22 = [&](const StateSpace& k0) {
        if (D22.norm() == 0.0) return k0;
        return feedback(k0, ss_static(D22));
    };

    // Feasibility: central controller exists and stabilizes the synthesis
    // plant's closed loop.  A norm certificate is optionally required.
    auto attempt = [&](double gamma, bool check_norm) -> std::optional<StateSpace> {
        auto K = central_controller(gs, gamma);
        if (!K) return std::nullopt;
        const StateSpace cl = lft_close(gs, *K);
        if (!is_stable(cl)) return std::nullopt;
        if (check_norm) {
            try {
                if (hinf_norm(cl, 1e-4) > gamma * (1.0 + 3e-4)) return std::nullopt;
            } catch (const IllPosed&) {
                return std::nullopt;
            }
        }
        return K;
    };

    auto bisect = [&](bool check_norm) -> std::optional<std::pair<StateSpace, double>> {
        auto K_hi = attempt(opt.gamma_hi, check_norm);
        if (!K_hi) return std::nullopt;
        StateSpace best = *K_hi;
        double lo = opt.gamma_lo, hi = opt.gamma_hi;
        while (hi > lo * (1.0 + opt.gamma_rel_tol)) {
            const double mid = std::sqrt(lo * hi);
            if (auto K = attempt(mid, check_norm)) {
                best = *K;
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return std::make_pair(best, hi);
    };

    auto certify = [&](const StateSpace& k0, double level) -> std::optional<HinfResult> {
        const StateSpace K = wrap_d22(k0);
        const StateSpace cl = lft_close(g, K);
        if (!is_stable(cl)) return std::nullopt;
        double achieved;
        try {
            achieved = hinf_norm(cl, 1e-7);
        } catch (const IllPosed&) {
            return std::nullopt;
        }
        if (achieved > level * (1.0 + 1e-6)) return std::nullopt;
        return HinfResult{K, std::max(level, achieved)};
    };

    // Fast pass first (Riccati feasibility only); if the final candidate fails
    // its certificate, redo the bisection with the per-level norm check.
    if (auto fast = bisect(false)) {
        if (auto res = certify(fast->first, fast->second)) return *res;
    }
    auto slow = bisect(true);
    if (!slow) throw NotSynthesizable("hinf_synthesize: infeasible even at gamma_hi");
    const StateSpace K = wrap_d22(slow->first);
    const StateSpace cl = lft_close(g, K);
    if (!is_stable(cl)) throw NotSynthesizable("hinf_synthesize: candidate does not stabilize the plant");
    const double achieved = hinf_norm(cl, 1e-7);
    return HinfResult{K, std::max(slow->second, achieved)};
}

}  // namespace ftc::ss
