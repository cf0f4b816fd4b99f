#include "ftc/linearize.hpp"

#include <cmath>

namespace ftc::ss {

Matrix fd_jacobian(const VectorFn& f, const Vector& x0, const Vector& scales,
                   double rel_step) {
    if (scales.size() != x0.size()) throw ChannelMismatch("fd_jacobian: scales size mismatch");
    const Vector f0 = f(x0);
    const int nx = static_cast<int>(x0.size());
    const int ny = static_cast<int>(f0.size());
    Matrix J(ny, nx);
    for (int i = 0; i < nx; ++i) {
        const double h = rel_step * std::max(std::abs(x0(i)), std::abs(scales(i)));
        auto central = [&](double step) {
            Vector xp = x0, xm = x0;
            xp(i) += step;
            xm(i) -= step;
            return Vector((f(xp) - f(xm)) / (2.0 * step));
        };
        // Richardson combination cancels the leading O(h^2) truncation term.
        const Vector d1 = central(h);
        const Vector d2 = central(0.5 * h);
        J.col(i) = (4.0 * d2 - d1) / 3.0;
    }
    return J;
}

}  // namespace ftc::ss
