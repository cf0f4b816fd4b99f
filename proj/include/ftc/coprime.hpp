#pragma once

#include "ftc/state_space.hpp"

namespace ftc::ss {

// Left coprime factorization of a plant P = M^-1 [N Nd Nf] built from a
// Riccati output-injection gain L (A + L C Hurwitz):
//   M  = (A + LC, L,           C, I)
//   N  = (A + LC, Bu + L Du,   C, Du)     and likewise for the d/f columns.
struct CoprimeFactors {
    StateSpace M;   // p x p
    StateSpace N;   // p x nu
    StateSpace Nd;  // p x nd
    StateSpace Nf;  // p x nf
    Matrix L;
};

// Observer gain from the dual Riccati equation with unit weights:
// L = -Y C' where  A Y + Y A' - Y C'C Y + I = 0.
Matrix observer_gain(const Matrix& A, const Matrix& C);

// P's inputs must be ordered [u (nu); d (nd); f (nf)].
CoprimeFactors left_coprime_factorize(const StateSpace& P, int nu, int nd, int nf);

// Same factor construction with a caller-supplied injection gain (A + LC must
// be Hurwitz for the factors to be stable; not checked here).
CoprimeFactors left_coprime_from_gain(const StateSpace& P, int nu, int nd, int nf,
                                      const Matrix& L);

// Left coprime factorization K = V^-1 U of a controller, same construction
// applied to the controller realization.
struct ControllerFactors {
    StateSpace V;  // nu x nu
    StateSpace U;  // nu x ny
    Matrix L;
};

ControllerFactors coprime_controller(const StateSpace& K);
ControllerFactors coprime_controller_from_gain(const StateSpace& K, const Matrix& L);

}  // namespace ftc::ss
