#include "ftc/fdi.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace ftc::fdi {

using ss::Matrix;
using ss::StateSpace;
using ss::Vector;

StateSpace default_isolation_target() {
    StateSpace t;
    t.A = -0.1 * Matrix::Identity(2, 2);
    t.B = 0.1 * Matrix::Identity(2, 2);
    t.C = Matrix::Identity(2, 2);
    t.D = Matrix::Zero(2, 2);
    t.inputs = {{"f", 2}};
    t.outputs = {{"r", 2}};
    return t;
}

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return a.size() == 0 || (a - b).cwiseAbs().maxCoeff() == 0.0;
}

// The factor systems of one factorization share the observer matrices; the
// shared-state reassembly below is only valid in that case.
void require_shared_realization(const ss::CoprimeFactors& f) {
    f.M.validate();
    f.N.validate();
    f.Nd.validate();
    f.Nf.validate();
    const bool shared = same_matrix(f.M.A, f.N.A) && same_matrix(f.M.A, f.Nd.A) &&
                        same_matrix(f.M.A, f.Nf.A) && same_matrix(f.M.C, f.N.C) &&
                        same_matrix(f.M.C, f.Nd.C) && same_matrix(f.M.C, f.Nf.C);
    if (!shared)
        throw ss::ChannelMismatch("fdi: factors do not share one observer realization");
}

}  // namespace

ss::GeneralizedPlant build_fdi_plant(const ss::CoprimeFactors& factors,
                                     const StateSpace& t_weight, const FdiScaling& scaling) {
    require_shared_realization(factors);
    t_weight.validate();
    const int p = factors.M.p();
    const int nd = factors.Nd.m();
    const int nf = factors.Nf.m();
    const int l = t_weight.p();
    if (t_weight.m() != nf)
        throw ss::ChannelMismatch("fdi: target weight inputs disagree with fault channels");
    if (!ss::is_stable(t_weight))
        throw std::invalid_argument("fdi: target weight must be stable");
    Vector sd = scaling.d_scale.size() == 0 ? Vector::Ones(nd) : scaling.d_scale;
    Vector sf = scaling.f_scale.size() == 0 ? Vector::Ones(nf) : scaling.f_scale;
    if (sd.size() != nd || sf.size() != nf)
        throw ss::ChannelMismatch("fdi: scaling sizes disagree with channel counts");
    if ((sd.array() <= 0.0).any() || (sf.array() <= 0.0).any())
        throw std::invalid_argument("fdi: channel scales must be positive");

    const int nt = t_weight.n();
    const int nl = factors.M.n();
    const int n = nt + nl;
    const int m = nd + nf + l;

    StateSpace g;
    g.A = Matrix::Zero(n, n);
    g.A.topLeftCorner(nt, nt) = t_weight.A;
    g.A.bottomRightCorner(nl, nl) = factors.M.A;
    g.B = Matrix::Zero(n, m);
    g.B.block(0, nd, nt, nf) = t_weight.B;
    g.B.block(nt, 0, nl, nd) = factors.Nd.B * sd.asDiagonal();
    g.B.block(nt, nd, nl, nf) = factors.Nf.B * sf.asDiagonal();
    g.C = Matrix::Zero(l + p, n);
    g.C.topLeftCorner(l, nt) = t_weight.C;
    g.C.bottomRightCorner(p, nl) = factors.M.C;
    g.D = Matrix::Zero(l + p, m);
    g.D.block(0, nd, l, nf) = t_weight.D;
    g.D.block(0, nd + nf, l, l) = -Matrix::Identity(l, l);
    g.D.block(l, 0, p, nd) = factors.Nd.D * sd.asDiagonal();
    g.D.block(l, nd, p, nf) = factors.Nf.D * sf.asDiagonal();
    g.inputs = {{"d", nd}, {"f", nf}, {"r", l}};
    g.outputs = {{"z", l}, {"fe", p}};

    ss::GeneralizedPlant gp;
    gp.sys = std::move(g);
    gp.nw = nd + nf;
    gp.nu = l;
    gp.nz = l;
    gp.ny = p;
    gp.validate();
    return gp;
}

FdiScaling default_scaling(SensorSet sensor_set) {
    FdiScaling s;
    s.d_scale = Vector(2);
    s.d_scale << (sensor_set == SensorSet::three_outputs ? 0.1 : 0.0036), 0.05;
    s.f_scale = Vector(2);
    s.f_scale << 40.0, 5.0;
    return s;
}

FdiDesign design_isolation_filter(const ss::CoprimeFactors& factors,
                                  const StateSpace& t_weight, SensorSet sensor_set,
                                  const FdiScaling& scaling, const ss::HinfOptions& opt) {
    const int expected = sensor_set == SensorSet::two_outputs ? 2 : 3;
    const int p = factors.M.p();
    if (p != expected)
        throw ss::ChannelMismatch("fdi: factor output count disagrees with sensor set");
    const int nd = factors.Nd.m();
    const int nf = factors.Nf.m();
    const int l = t_weight.p();
    if (nf != 2 || l != 2 || nd < 1)
        throw ss::ChannelMismatch("fdi: isolation design expects two fault channels");

    FdiScaling sc = scaling;
    if (sc.d_scale.size() == 0 && sc.f_scale.size() == 0) sc = default_scaling(sensor_set);
    // Validates factors, target, and scaling; also the certification plant.
    const ss::GeneralizedPlant gp = build_fdi_plant(factors, t_weight, sc);

    // Stage one: static decoupler K pinning the DC point.  In the base
    // configuration K inverts the fault map; the third measurement adds the
    // degrees of freedom to zero the air-flow disturbance column as well.
    const Matrix f0 = ss::dcgain(factors.Nf) * sc.f_scale.asDiagonal();
    const Matrix d0 = ss::dcgain(factors.Nd) * sc.d_scale.asDiagonal();
    Matrix pin(p, p);
    if (p == 2) {
        pin = f0;
    } else {
        pin << f0, d0.col(0);
    }
    const Eigen::JacobiSVD<Matrix> svd(pin.transpose(),
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues()(p - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= 1e-10 * smax)
        throw ss::NotSynthesizable("fdi: DC fault/disturbance directions are collinear");
    Matrix rhs = Matrix::Zero(p, nf);
    rhs.topLeftCorner(nf, nf) = Matrix::Identity(nf, nf);
    const Matrix k_dec = svd.solve(rhs).transpose();  // nf x p, K [F (dm)] = [I (0)]

    // Scaled stacked fault/disturbance map f_e = [Nd Sd, Nf Sf] w through the
    // shared observer realization.
    StateSpace gdf;
    gdf.A = factors.Nd.A;
    gdf.C = factors.Nd.C;
    gdf.B = Matrix(gdf.A.rows(), nd + nf);
    gdf.B << factors.Nd.B * sc.d_scale.asDiagonal(), factors.Nf.B * sc.f_scale.asDiagonal();
    gdf.D = Matrix(p, nd + nf);
    gdf.D << factors.Nd.D * sc.d_scale.asDiagonal(), factors.Nf.D * sc.f_scale.asDiagonal();
    gdf.inputs = {{"d", nd}, {"f", nf}};
    gdf.outputs = {{"fe", p}};

    StateSpace hdec = ss::cascade(ss::ss_static(k_dec), t_weight);
    hdec.inputs = {{"fe", p}};
    hdec.outputs = {{"r", l}};

    // Target path extended over all exogenous channels: z covers [0 T] w.
    StateSpace t_ext = t_weight;
    t_ext.B = (Matrix(t_weight.n(), nd + nf) << Matrix::Zero(t_weight.n(), nd),
               t_weight.B).finished();
    t_ext.D = (Matrix(l, nd + nf) << Matrix::Zero(l, nd), t_weight.D).finished();
    t_ext.inputs = {{"d", nd}, {"f", nf}};
    t_ext.outputs = {{"z", l}};

    // Stage two: refine with H = T K + s/(s+w0) R over the same cost.  The
    // high-pass zero sits exactly at s = 0 so R cannot move the pinned DC
    // map; a small low-passed penalty on R's output keeps the synthesis
    // regular there (the error channel alone loses rank at DC) and removes
    // any incentive to build huge static gains.
    const double w0 = 0.02;
    const double c_dc = 0.01;
    StateSpace hp;
    hp.A = -w0 * Matrix::Identity(l, l);
    hp.B = Matrix::Identity(l, l);
    hp.C = -w0 * Matrix::Identity(l, l);
    hp.D = Matrix::Identity(l, l);
    hp.inputs = {{"q", l}};
    hp.outputs = {{"zq", l}};
    StateSpace lp;
    lp.A = -w0 * Matrix::Identity(l, l);
    lp.B = Matrix::Identity(l, l);
    lp.C = c_dc * w0 * Matrix::Identity(l, l);
    lp.D = Matrix::Zero(l, l);
    lp.inputs = {{"q", l}};
    lp.outputs = {{"zdc", l}};

    const StateSpace e_dec = ss::sub(t_ext, ss::cascade(gdf, hdec));
    const StateSpace zw = ss::vcat(e_dec, ss::ss_zero(l, nd + nf));
    const StateSpace zq = ss::vcat(ss::negate(hp), lp);
    ss::GeneralizedPlant refine;
    refine.sys = ss::vcat(ss::hcat(zw, zq), ss::hcat(gdf, ss::ss_zero(p, l)));
    refine.sys.inputs = {{"w", nd + nf}, {"q", l}};
    refine.sys.outputs = {{"z", 2 * l}, {"fe", p}};
    refine.nw = nd + nf;
    refine.nu = l;
    refine.nz = 2 * l;
    refine.ny = p;
    const ss::HinfResult res = ss::hinf_synthesize(refine, opt);

    FdiDesign d;
    d.h_i = ss::add(hdec, ss::cascade(res.K, hp));
    d.h_i.inputs = {{"fe", p}};
    d.h_i.outputs = {{"r", l}};
    d.t_weight = t_weight;
    d.thresholds = Vector::Zero(l);
    d.sensor_set = sensor_set;
    d.gamma = ss::hinf_norm(ss::lft_close(gp, d.h_i));

    if (!ss::is_stable(d.h_i))
        throw ss::NotSynthesizable("fdi: synthesized isolation filter is unstable");

    // DC isolation, column-wise (invariant to the fault scaling): each fault
    // must land at least five times harder in its own residual channel than
    // in any other channel.
    const Matrix g0 = ss::dcgain(ss::cascade(factors.Nf, d.h_i));
    for (int j = 0; j < g0.cols(); ++j)
        for (int i = 0; i < g0.rows(); ++i) {
            if (i == j) continue;
            if (std::abs(g0(j, j)) < 5.0 * std::abs(g0(i, j)))
                throw ss::NotSynthesizable(
                    "fdi: fault-to-residual map is not diagonally dominant at DC");
        }
    return d;
}

ResidualState make_residual_state(const ss::CoprimeFactors& factors, const FdiDesign& design,
                                  double dt, double debounce_s) {
    require_shared_realization(factors);
    design.h_i.validate();
    const int p = factors.M.p();
    const int nu = factors.N.m();
    const int l = design.h_i.p();
    if (design.h_i.m() != p)
        throw ss::ChannelMismatch("fdi: isolation filter inputs disagree with measurements");
    if (l != 2)
        throw ss::ChannelMismatch("fdi: residual generator expects a two-channel filter");
    if (dt <= 0.0) throw std::invalid_argument("fdi: dt must be positive");
    if (debounce_s < 0.0) throw std::invalid_argument("fdi: debounce must be non-negative");
    if (design.thresholds.size() != l || (design.thresholds.array() <= 0.0).any())
        throw std::invalid_argument("fdi: thresholds must be positive (calibrate first)");

    // Recover the plant realization from the factors: A = A_L - LC,
    // B_u = N.B - L Du, and the injection gain L itself.
    const Matrix& al = factors.M.A;
    const Matrix& l_gain = factors.M.B;
    const Matrix& c = factors.M.C;
    const Matrix& d_u = factors.N.D;
    const Matrix a = al - l_gain * c;
    const Matrix b_u = factors.N.B - l_gain * d_u;
    const int n = static_cast<int>(a.rows());

    ResidualState rs;
    // Plant zero-order hold.
    {
        Matrix blk = Matrix::Zero(n + nu, n + nu);
        blk.topLeftCorner(n, n) = a * dt;
        blk.topRightCorner(n, nu) = b_u * dt;
        const Matrix e = blk.exp();
        rs.g_obs = e.topLeftCorner(n, n);  // Ad, injection added below
        rs.b_u = e.topRightCorner(n, nu);
    }
    // Integrated injection gain Hy = (int_0^dt e^{A_L tau} dtau) L.
    {
        Matrix blk = Matrix::Zero(2 * n, 2 * n);
        blk.topLeftCorner(n, n) = al * dt;
        blk.topRightCorner(n, n) = Matrix::Identity(n, n) * dt;
        const Matrix e = blk.exp();
        rs.h_y = e.topRightCorner(n, n) * l_gain;
    }
    rs.g_obs += rs.h_y * c;
    if (n > 0 && rs.g_obs.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
        throw ss::IllPosed("fdi: sampled observer is unstable at this step size");

    rs.c_out = c;
    rs.d_u = d_u;
    rs.h_i = ss::c2d_zoh(design.h_i, dt);
    rs.thresholds = design.thresholds;
    rs.dt = dt;
    rs.debounce_s = debounce_s;
    rs.debounce_samples = std::max<long long>(1, std::llround(debounce_s / dt));
    rs.x_o = Vector::Zero(n);
    rs.f_e = Vector::Zero(p);
    rs.r = Vector::Zero(l);
    return rs;
}

ResidualOutput residual_step(ResidualState& rs, const Vector& u_cmd, const Vector& y_meas,
                             double dt) {
    if (dt != rs.dt)
        throw std::invalid_argument("fdi: step size disagrees with the generator");
    if (u_cmd.size() != rs.b_u.cols() || y_meas.size() != rs.c_out.rows())
        throw ss::ChannelMismatch("fdi: residual step signal dimensions");

    rs.f_e = rs.c_out * rs.x_o + y_meas - rs.d_u * u_cmd;
    rs.r = rs.h_i.step(rs.f_e);
    rs.x_o = rs.g_obs * rs.x_o + rs.h_y * y_meas - rs.b_u * u_cmd;

    const double t_now = static_cast<double>(rs.k) * rs.dt;
    for (int i = 0; i < 2; ++i) {
        if (std::abs(rs.r[i]) > rs.thresholds[i]) {
            ++rs.above[i];
            if (!rs.flags[i] && rs.above[i] >= rs.debounce_samples) {
                rs.flags[i] = true;
                rs.onset[i] = t_now;
            }
        } else {
            rs.above[i] = 0;
        }
    }
    ++rs.k;
    return ResidualOutput{rs.r, rs.flags};
}

void reset(ResidualState& rs) {
    rs.x_o.setZero();
    rs.f_e.setZero();
    rs.r.setZero();
    rs.h_i.reset();
    rs.flags = {{false, false}};
    rs.onset = {{-1.0, -1.0}};
    rs.above = {{0, 0}};
    rs.k = 0;
}

std::string to_text(const FdiDesign& d) {
    nlohmann::json j;
    j["sensor_set"] = d.sensor_set == SensorSet::two_outputs ? "two_outputs" : "three_outputs";
    j["gamma"] = d.gamma;
    j["thresholds"] = std::vector<double>(d.thresholds.data(),
                                          d.thresholds.data() + d.thresholds.size());
    j["h_i"] = nlohmann::json::parse(ss::to_text(d.h_i));
    j["t_weight"] = nlohmann::json::parse(ss::to_text(d.t_weight));
    return j.dump(1);
}

FdiDesign design_from_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    FdiDesign d;
    const std::string set = j.at("sensor_set").get<std::string>();
    if (set == "two_outputs")
        d.sensor_set = SensorSet::two_outputs;
    else if (set == "three_outputs")
        d.sensor_set = SensorSet::three_outputs;
    else
        throw std::invalid_argument("fdi: unknown sensor set '" + set + "'");
    d.gamma = j.at("gamma").get<double>();
    const auto thr = j.at("thresholds").get<std::vector<double>>();
    d.thresholds = Eigen::Map<const Vector>(thr.data(), static_cast<Eigen::Index>(thr.size()));
    d.h_i = ss::from_text(j.at("h_i").dump());
    d.t_weight = ss::from_text(j.at("t_weight").dump());
    return d;
}

}  // namespace ftc::fdi
