#include <ftc/controller.hpp>

namespace ftc::ctrl {

ss::StateSpace error_weight(const PerformanceWeights& w) {
    // W_e(s) = k_e (s + omega_i)/(s + p) with p = 1e-4 omega_i, applied to
    // both error channels:  W_e = k_e + k_e (omega_i - p)/(s + p).
    const double p = 1e-4 * w.omega_i;
    const ss::Matrix i2 = ss::Matrix::Identity(2, 2);
    ss::StateSpace we(-p * i2, i2, w.k_e * (w.omega_i - p) * i2, w.k_e * i2);
    we.validate();
    return we;
}

ss::GeneralizedPlant build_augmented_plant(const ss::StateSpace& p_lin,
                                           const PerformanceWeights& w) {
    p_lin.validate();
    const auto [u_off, u_cnt] = p_lin.input_span("u");
    const auto [d_off, d_cnt] = p_lin.input_span("d");
    if (u_cnt != 2)
        throw ss::ChannelMismatch("build_augmented_plant: expected a 2-channel 'u' group, got " +
                                  std::to_string(u_cnt));
    if (d_cnt < 1)
        throw ss::ChannelMismatch("build_augmented_plant: empty disturbance group");
    if (p_lin.p() != 2)
        throw ss::ChannelMismatch("build_augmented_plant: expected 2 measured outputs, got " +
                                  std::to_string(p_lin.p()));
    if (p_lin.D.middleCols(u_off, u_cnt).cwiseAbs().maxCoeff() != 0.0 ||
        p_lin.D.col(d_off).cwiseAbs().maxCoeff() != 0.0)
        throw ss::ChannelMismatch(
            "build_augmented_plant: plant must be strictly proper in u and d");

    const int np = p_lin.n();
    const ss::Matrix b_u = p_lin.B.middleCols(u_off, u_cnt);
    const ss::Matrix b_d = p_lin.B.col(d_off);
    const ss::Matrix& c_y = p_lin.C;

    const ss::StateSpace we = error_weight(w);
    const int nw_e = we.n();
    const int n = np + nw_e;

    // Exogenous inputs w = [d, r1, r2, n1, n2]; the measured error is
    // e = r_scale r - y - n_scale n and drives both the weight states and
    // the controller measurement.
    const int nw = 5, nu = 2, nz = 6, ny = 2;
    ss::Matrix a = ss::Matrix::Zero(n, n);
    a.topLeftCorner(np, np) = p_lin.A;
    a.block(np, 0, nw_e, np) = -we.B * c_y;
    a.bottomRightCorner(nw_e, nw_e) = we.A;

    ss::Matrix b = ss::Matrix::Zero(n, nw + nu);
    b.block(0, 0, np, 1) = w.d_scale * b_d;
    b.block(np, 1, nw_e, 2) = w.r_scale * we.B;
    b.block(np, 3, nw_e, 2) = -w.n_scale * we.B;
    b.block(0, nw, np, nu) = b_u;

    const Eigen::DiagonalMatrix<double, 2> w_u(w.w_u_n, w.w_u_a);
    ss::Matrix c = ss::Matrix::Zero(nz + ny, n);
    c.block(0, 0, 2, np) = -we.D * c_y;       // weighted error, state part
    c.block(0, np, 2, nw_e) = we.C;
    c.block(4, 0, 2, np) = w.w_y * c_y;       // weighted raw outputs
    c.block(6, 0, 2, np) = -c_y;              // measurement e = r - y - n

    ss::Matrix d = ss::Matrix::Zero(nz + ny, nw + nu);
    d.block(0, 1, 2, 2) = w.r_scale * we.D;
    d.block(0, 3, 2, 2) = -w.n_scale * we.D;
    d.block(2, nw, 2, 2) = w_u;               // weighted actuator commands
    d.block(6, 1, 2, 2) = w.r_scale * ss::Matrix::Identity(2, 2);
    d.block(6, 3, 2, 2) = -w.n_scale * ss::Matrix::Identity(2, 2);

    ss::GeneralizedPlant gp;
    gp.sys = ss::StateSpace(a, b, c, d);
    gp.sys.inputs = {{"d", 1}, {"r", 2}, {"n", 2}, {"u", 2}};
    gp.sys.outputs = {{"ze", 2}, {"zu", 2}, {"zy", 2}, {"e", 2}};
    gp.nw = nw;
    gp.nu = nu;
    gp.nz = nz;
    gp.ny = ny;
    gp.validate();
    return gp;
}

NominalController synth_nominal(const ss::StateSpace& p_lin, const PerformanceWeights& w,
                                const ss::HinfOptions& opt) {
    const ss::GeneralizedPlant gp = build_augmented_plant(p_lin, w);
    ss::HinfResult res = ss::hinf_synthesize(gp, opt);
    NominalController out;
    out.K = std::move(res.K);
    out.K.inputs = {{"e", 2}};
    out.K.outputs = {{"u", 2}};
    out.gamma = res.gamma;
    out.factors = ss::coprime_controller(out.K);
    return out;
}

}  // namespace ftc::ctrl
