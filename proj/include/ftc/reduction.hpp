#pragma once

#include "ftc/state_space.hpp"

namespace ftc::ss {

struct TruncationResult {
    StateSpace sys;
    Vector hankel;       // all Hankel singular values of the input system
    double error_bound;  // 2 * sum of the discarded Hankel values
};

// Balanced truncation of a stable system to at most r states.  Gramians come
// from Lyapunov solves; the balancing transform from an SVD of the Gramian
// square-root product.  Throws UnstableInput on unstable input.
TruncationResult balanced_truncate(const StateSpace& g, int r);

}  // namespace ftc::ss
