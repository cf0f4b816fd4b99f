#pragma once

#include <stdexcept>

#include "ftc/state_space.hpp"

namespace ftc::ss {

struct NotSynthesizable : std::runtime_error {
    explicit NotSynthesizable(const std::string& what) : std::runtime_error(what) {}
};

// H-infinity norm of a stable system, located by bisection on the
// imaginary-axis eigenvalue test of the associated Hamiltonian.
// Throws UnstableInput if the system is unstable.
double hinf_norm(const StateSpace& g, double rel_tol = 1e-4);

// Plant partitioned for synthesis: inputs [w (nw); u (nu)], outputs
// [z (nz); y (ny)].
struct GeneralizedPlant {
    StateSpace sys;
    int nw = 0, nu = 0, nz = 0, ny = 0;

    void validate() const;
    Matrix B1() const { return sys.B.leftCols(nw); }
    Matrix B2() const { return sys.B.rightCols(nu); }
    Matrix C1() const { return sys.C.topRows(nz); }
    Matrix C2() const { return sys.C.bottomRows(ny); }
    Matrix D11() const { return sys.D.topLeftCorner(nz, nw); }
    Matrix D12() const { return sys.D.topRightCorner(nz, nu); }
    Matrix D21() const { return sys.D.bottomLeftCorner(ny, nw); }
    Matrix D22() const { return sys.D.bottomRightCorner(ny, nu); }
};

// Close the lower loop u = K y; the result maps w -> z.
// Throws IllPosed when I - D22 DK is singular.
StateSpace lft_close(const GeneralizedPlant& g, const StateSpace& k);

struct HinfOptions {
    double gamma_rel_tol = 1e-4;
    double gamma_lo = 1e-6;
    double gamma_hi = 1e6;
    // Feedthrough blocks appended when D12/D21 are rank deficient.
    double reg_eps = 1e-4;
    // Corner frequency of the strictly-proper filter inserted on w when the
    // plant has a direct w -> z feedthrough (removes D11 from the synthesis
    // equations; the achieved level is always verified on the original plant).
    double w_filter_freq = 1e5;
};

struct HinfResult {
    StateSpace K;
    double gamma = 0.0;  // certified achieved level on the original plant
};

// Output-feedback synthesis: bisects gamma over [gamma_lo, gamma_hi], solving
// the two coupled Riccati equations of the central-controller construction at
// each level, and returns the controller for the smallest feasible level.
// Throws NotSynthesizable when even gamma_hi is infeasible.
HinfResult hinf_synthesize(const GeneralizedPlant& g, const HinfOptions& opt = {});

}  // namespace ftc::ss
