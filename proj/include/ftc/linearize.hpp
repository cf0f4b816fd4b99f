#pragma once

#include <functional>

#include "ftc/state_space.hpp"

namespace ftc::ss {

using VectorFn = std::function<Vector(const Vector&)>;

// Jacobian of f at x0 by central differences with one Richardson
// extrapolation step:  J ~= (4 D(h/2) - D(h)) / 3.  `scales` gives the
// characteristic magnitude of each coordinate; the step for coordinate i is
// rel_step * max(|x0_i|, |scales_i|).
Matrix fd_jacobian(const VectorFn& f, const Vector& x0, const Vector& scales,
                   double rel_step = 5e-5);

}  // namespace ftc::ss
