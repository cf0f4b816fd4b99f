#pragma once

#include <optional>
#include <stdexcept>

#include "ftc/state_space.hpp"

namespace ftc::ss {

struct NoStabilizingSolution : std::runtime_error {
    explicit NoStabilizingSolution(const std::string& what) : std::runtime_error(what) {}
};

// Continuous Lyapunov equation  A X + X A' + Q = 0  (Q symmetric), solved by
// Bartels-Stewart on the real Schur form of A.
Matrix lyap(const Matrix& A, const Matrix& Q);

// Stabilizing solution of the Hamiltonian-form Riccati equation
//   F' X + X F + X G X + S = 0,   F + G X Hurwitz,
// where H = [F G; -S -F'] is the 2n x 2n Hamiltonian.  Computed via the
// scaled matrix sign iteration, then polished with Newton steps (each one a
// Lyapunov solve).  Returns std::nullopt when H has eigenvalues too close to
// the imaginary axis or no stabilizing solution exists.
std::optional<Matrix> riccati_from_hamiltonian(const Matrix& H);

// Stabilizing solution X of  A' X + X A - X B R^-1 B' X + Q = 0.
// Throws NoStabilizingSolution if the associated Hamiltonian has
// imaginary-axis eigenvalues or the stable subspace is degenerate.
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

// Frobenius norm of the CARE residual divided by (1 + ||X||_F).
double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& X);

}  // namespace ftc::ss
