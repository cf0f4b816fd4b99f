#include "ftc/coprime.hpp"

#include "ftc/riccati.hpp"

namespace ftc::ss {

Matrix observer_gain(const Matrix& A, const Matrix& C) {
    const int n = static_cast<int>(A.rows());
    const int p = static_cast<int>(C.rows());
    if (n == 0) return Matrix(0, p);
    const Matrix Y = solve_care(A.transpose(), C.transpose(), Matrix::Identity(n, n),
                                Matrix::Identity(p, p));
    return -Y * C.transpose();
}

CoprimeFactors left_coprime_from_gain(const StateSpace& P, int nu, int nd, int nf,
                                      const Matrix& L) {
    P.validate();
    if (nu + nd + nf != P.m())
        throw ChannelMismatch("left_coprime: channel split disagrees with inputs");
    if (L.rows() != P.n() || L.cols() != P.p())
        throw ChannelMismatch("left_coprime: gain dimensions disagree with plant");
    CoprimeFactors f;
    f.L = L;
    const Matrix AL = P.A + L * P.C;
    const int p = P.p();

    f.M.A = AL;
    f.M.B = L;
    f.M.C = P.C;
    f.M.D = Matrix::Identity(p, p);

    auto factor_for = [&](int offset, int count) {
        StateSpace s;
        s.A = AL;
        s.B = P.B.middleCols(offset, count) + L * P.D.middleCols(offset, count);
        s.C = P.C;
        s.D = P.D.middleCols(offset, count);
        return s;
    };
    f.N = factor_for(0, nu);
    f.Nd = factor_for(nu, nd);
    f.Nf = factor_for(nu + nd, nf);
    return f;
}

CoprimeFactors left_coprime_factorize(const StateSpace& P, int nu, int nd, int nf) {
    P.validate();
    return left_coprime_from_gain(P, nu, nd, nf, observer_gain(P.A, P.C));
}

ControllerFactors coprime_controller_from_gain(const StateSpace& K, const Matrix& L) {
    K.validate();
    if (L.rows() != K.n() || L.cols() != K.p())
        throw ChannelMismatch("coprime_controller: gain dimensions disagree");
    ControllerFactors f;
    f.L = L;
    const Matrix AL = K.A + L * K.C;
    f.V.A = AL;
    f.V.B = L;
    f.V.C = K.C;
    f.V.D = Matrix::Identity(K.p(), K.p());
    f.U.A = AL;
    f.U.B = K.B + L * K.D;
    f.U.C = K.C;
    f.U.D = K.D;
    return f;
}

ControllerFactors coprime_controller(const StateSpace& K) {
    K.validate();
    try {
        return coprime_controller_from_gain(K, observer_gain(K.A, K.C));
    } catch (const NoStabilizingSolution&) {
        // Controllers with modes spread over many decades (near-integral
        // action plus fast regularization modes) can defeat the dual
        // Riccati numerically.  When the realization is already Hurwitz,
        // L = 0 yields exact stable factors; realizing V as the static
        // identity makes U - V K cancel without any numerical residue.
        if (spectral_abscissa(K.A) >= 0.0) throw;
        ControllerFactors f;
        f.L = Matrix::Zero(K.n(), K.p());
        f.V = ss_static(Matrix::Identity(K.p(), K.p()));
        f.U = K;
        return f;
    }
}

}  // namespace ftc::ss
