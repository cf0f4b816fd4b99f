#include "ftc/plant.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ftc/linearize.hpp"

namespace ftc::plant {

namespace {

constexpr double kKelvin = 273.15;
// L-stable Rosenbrock-2 coefficient.
const double kRosGamma = 1.0 - 1.0 / std::sqrt(2.0);

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

ss::Vector PlantState::to_vector() const {
    ss::Vector x(6);
    x << evap.zeta1, evap.p_e, evap.h_e2, evap.t_e1w, evap.t_e2w, p_c;
    return x;
}

PlantState PlantState::from_vector(const ss::Vector& x) {
    if (x.size() != 6) throw std::invalid_argument("PlantState::from_vector: need 6 entries");
    PlantState s;
    s.evap.zeta1 = x[0];
    s.evap.p_e = x[1];
    s.evap.h_e2 = x[2];
    s.evap.t_e1w = x[3];
    s.evap.t_e2w = x[4];
    s.p_c = x[5];
    return s;
}

ss::Vector state_scales() {
    ss::Vector s(6);
    s << 1.0, 300.0, 400.0, 25.0, 25.0, 1100.0;
    return s;
}

Plant::Plant(PlantParams params, props::PropertyModel model)
    : params_(params), props_(std::move(model)) {}

void Plant::freeze_void_fraction(double gamma_bar) {
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0))
        throw std::invalid_argument("freeze_void_fraction: value must lie in (0, 1)");
    gamma_bar_ = gamma_bar;
}

std::pair<double, double> Plant::compressor_flow(double p_suction_kpa, double h_suction,
                                                 double p_discharge_kpa,
                                                 double n_c_actual_rpm) const {
    if (n_c_actual_rpm < 0.0)
        throw std::invalid_argument("compressor_flow: speed must be non-negative");
    const auto sh = props_.sh_props(p_suction_kpa, h_suction);
    const double omega = 2.0 * M_PI * n_c_actual_rpm / 60.0;  // rad/s
    const double r_p = p_discharge_kpa / p_suction_kpa;
    // Clearance re-expansion cuts the drawn volume as the pressure ratio
    // grows; guard against nonphysical negative efficiency far outside the
    // calibrated range.
    const double droop = 1.0 - params_.c_cl * (std::pow(std::max(1.0, r_p), params_.x_cl) - 1.0);
    const double eta_v_eff = params_.eta_v * std::max(0.05, droop);
    const double mdot = eta_v_eff * params_.v_d * sh.rho * omega;
    // Isentropic enthalpy rise of an ideal-gas-like vapor, degraded by the
    // isentropic efficiency; clamped so reversed pressure ratios (which do
    // not occur in operation) cannot produce an enthalpy drop.
    const double t1_k = sh.t + kKelvin;
    const double cp_v = vapor_cp(p_suction_kpa);
    const double ratio = p_discharge_kpa / p_suction_kpa;
    const double dh_s = cp_v * t1_k * (std::pow(ratio, params_.kappa) - 1.0);
    const double h_out = h_suction + std::max(0.0, dh_s) / params_.eta_s;
    return {mdot, h_out};
}

double Plant::vapor_cp(double p_kpa) const {
    // The superheat temperature map is affine in enthalpy, so one probe
    // recovers the vapor heat capacity exactly.
    const auto sat = props_.sat_props(p_kpa);
    const double dh = 10.0;
    const auto sh = props_.sh_props(p_kpa, sat.h_g + dh);
    return dh / (sh.t - sat.t_sat);
}

double Plant::valve_flow(double alpha_pct, double p_up_kpa, double p_down_kpa,
                         double rho_up) const {
    if (alpha_pct < 0.0 || alpha_pct > 100.0)
        throw std::invalid_argument("valve_flow: opening must be within 0..100 %");
    if (rho_up <= 0.0) throw std::invalid_argument("valve_flow: density must be positive");
    if (p_up_kpa < p_down_kpa)
        throw NegativePressureDrop("valve_flow: upstream pressure " + fmt(p_up_kpa) +
                                   " kPa below downstream " + fmt(p_down_kpa) + " kPa");
    const double area = params_.c_d * (alpha_pct / 100.0) * params_.a_v_max;
    const double dp_pa = (p_up_kpa - p_down_kpa) * 1e3;
    return area * std::sqrt(2.0 * rho_up * dp_pa);
}

double Plant::condenser_target(double mdot_c, double t_ca_in) const {
    return params_.p_c0 + params_.k_m * (mdot_c - params_.mdot_c0) +
           params_.k_t * (t_ca_in - params_.t_ca0);
}

double Plant::liquid_outlet_enthalpy(double p_c_kpa) const {
    const auto sat = props_.sat_props(p_c_kpa);
    return sat.h_f - params_.cp_liq * params_.dt_subcool;
}

EvapRhs Plant::evaporator_rhs(const EvapState& x, const PlantInputs& u_actual,
                              const Boundary& v, double p_c_kpa) const {
    return evaporator_rhs_g(x, u_actual, v, p_c_kpa, gamma_bar_);
}

EvapRhs Plant::evaporator_rhs_g(const EvapState& x, const PlantInputs& u_actual,
                                const Boundary& v, double p_c_kpa,
                                double gamma_bar) const {
    if (v.mdot_ea <= 0.0)
        throw std::invalid_argument("evaporator_rhs: air mass flow must be positive");
    const PlantParams& pr = params_;
    const double zeta = x.zeta1;
    const double vol = pr.v_e;

    const auto sat = props_.sat_props(x.p_e);
    const double h_bar = 0.5 * (sat.h_g + x.h_e2);
    const auto sh = props_.sh_props(x.p_e, h_bar);

    // Lumped two-phase mixture properties at the frozen mean void fraction.
    const double g = gamma_bar;
    const double rho_tp = g * sat.rho_g + (1.0 - g) * sat.rho_f;
    const double drho_tp = g * sat.d_rho_g_dp + (1.0 - g) * sat.d_rho_f_dp;
    const double rho_h_tp = g * sat.rho_g * sat.h_g + (1.0 - g) * sat.rho_f * sat.h_f;
    const double drho_h_tp = g * (sat.d_rho_g_dp * sat.h_g + sat.rho_g * sat.d_h_g_dp) +
                             (1.0 - g) * (sat.d_rho_f_dp * sat.h_f + sat.rho_f * sat.d_h_f_dp);
    const double h_tp = rho_h_tp / rho_tp;
    const double rho_dh_tp = drho_h_tp - h_tp * drho_tp;  // rho_tp * d(h_tp)/dp

    // Flows through the boundary devices.
    const double mdot_c = compressor_flow(x.p_e, x.h_e2, p_c_kpa, u_actual.n_c).first;
    const auto sat_c = props_.sat_props(p_c_kpa);
    const double h4 = sat_c.h_f - pr.cp_liq * pr.dt_subcool;
    const double mdot_v = valve_flow(u_actual.alpha, p_c_kpa, x.p_e, sat_c.rho_f);
    const double x4 = (h4 - sat.h_f) / (sat.h_g - sat.h_f);

    // Heat flows; the air-side coefficient scales with the air flow.
    const double alpha_air = pr.alpha_air * std::pow(v.mdot_ea / pr.mdot_ea0, pr.air_flow_exp);
    const double qdot_tp = pr.alpha_tp * pr.a_i * zeta * (x.t_e1w - sat.t_sat);
    const double qdot_sh = pr.alpha_sh * pr.a_i * (1.0 - zeta) * (x.t_e2w - sh.t);
    const double qdot_air_tp = alpha_air * pr.a_o * zeta * (v.t_ea_in - x.t_e1w);
    const double qdot_air_sh = alpha_air * pr.a_o * (1.0 - zeta) * (v.t_ea_in - x.t_e2w);

    // Refrigerant mass/energy balances of the two zones with the interface
    // flow as the fourth unknown: columns (zeta1', p_e', h_e2', mdot_12).
    // The interface flow is measured at the fixed tube location, so the
    // boundary-motion flux shows up as the rho_g terms in the first column.
    ss::Matrix a4(4, 4);
    ss::Vector b4(4);
    a4.row(0) << vol * (rho_tp - sat.rho_g), vol * zeta * drho_tp, 0.0, 1.0;
    b4[0] = mdot_v;
    a4.row(1) << vol * sat.rho_g * (h_tp - sat.h_g), vol * zeta * (rho_dh_tp - 1.0), 0.0,
        sat.h_g - h_tp;
    b4[1] = mdot_v * (h4 - h_tp) + qdot_tp;
    a4.row(2) << -vol * (sh.rho - sat.rho_g),
        vol * (1.0 - zeta) * (sh.d_rho_dp + 0.5 * sh.d_rho_dh * sat.d_h_g_dp),
        vol * (1.0 - zeta) * 0.5 * sh.d_rho_dh, -1.0;
    b4[2] = -mdot_c;
    a4.row(3) << vol * sat.rho_g * (sat.h_g - h_bar),
        vol * (1.0 - zeta) * (0.5 * sh.rho * sat.d_h_g_dp - 1.0),
        vol * (1.0 - zeta) * 0.5 * sh.rho, -(sat.h_g - h_bar);
    b4[3] = -mdot_c * (x.h_e2 - h_bar) + qdot_sh;

    Eigen::JacobiSVD<ss::Matrix> svd(a4);
    const double smin = svd.singularValues()(3);
    const double cond = smin > 0.0 ? svd.singularValues()(0) / smin
                                   : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12))
        throw SingularZ("evaporator_rhs: refrigerant balance block condition number " +
                        fmt(cond) + " exceeds 1e12");

    // Eliminate the interface flow with the first row (unit coefficient) to
    // produce the descriptor matrix over the state derivatives alone.
    EvapRhs out;
    out.z = ss::Matrix::Zero(5, 5);
    out.f = ss::Vector::Zero(5);
    for (int k = 1; k < 4; ++k) {
        const double c = a4(k, 3);
        out.z.block(k - 1, 0, 1, 3) = a4.block(k, 0, 1, 3) - c * a4.block(0, 0, 1, 3);
        out.f[k - 1] = b4[k] - c * b4[0];
    }
    out.z(3, 3) = pr.c_w_tp;
    out.f[3] = qdot_air_tp - qdot_tp;
    out.z(4, 4) = pr.c_w_sh;
    out.f[4] = qdot_air_sh - qdot_sh;

    const ss::Vector xi = a4.partialPivLu().solve(b4);
    out.mdot_12 = xi[3];
    out.qdot_tp = qdot_tp;
    out.qdot_sh = qdot_sh;
    out.mdot_c = mdot_c;
    out.mdot_v = mdot_v;
    out.h4 = h4;
    out.x4 = x4;
    out.cond4 = cond;
    return out;
}

FullRhs Plant::rhs(const PlantState& x, const PlantInputs& u_actual,
                   const Boundary& v) const {
    return rhs_g(x, u_actual, v, gamma_bar_);
}

FullRhs Plant::rhs_g(const PlantState& x, const PlantInputs& u_actual, const Boundary& v,
                     double gamma_bar) const {
    FullRhs out;
    out.evap = evaporator_rhs_g(x.evap, u_actual, v, x.p_c, gamma_bar);
    out.p_c_target = condenser_target(out.evap.mdot_c, v.t_ca_in);
    out.xdot = ss::Vector(6);
    out.xdot.head(5) = out.evap.z.partialPivLu().solve(out.evap.f);
    out.xdot[5] = (out.p_c_target - x.p_c) / params_.tau_c;
    return out;
}

ss::Vector Plant::outputs(const PlantState& x, double f_p, bool with_wall_temp) const {
    const auto sat = props_.sat_props(x.evap.p_e);
    const auto sh = props_.sh_props(x.evap.p_e, x.evap.h_e2);
    ss::Vector y(with_wall_temp ? 3 : 2);
    y[0] = x.evap.p_e + f_p;
    y[1] = sh.t - sat.t_sat;
    if (with_wall_temp) y[2] = x.evap.t_e2w;
    return y;
}

TrimResult Plant::trim(const TrimTarget& target) {
    if (target.inputs.has_value() == target.outputs.has_value())
        throw std::invalid_argument(
            "trim: specify exactly one of fixed inputs or output targets");
    const bool output_mode = target.outputs.has_value();
    const Boundary& v = target.boundary;
    const ss::Vector xs = state_scales();

    // Mean void fraction follows the iterate during trim and is frozen at
    // the converged point; the returned equilibrium is therefore also an
    // equilibrium of the frozen-value model.
    auto live_gamma = [&](const PlantState& s) {
        const auto sat = props_.sat_props(s.evap.p_e);
        const double h4 = liquid_outlet_enthalpy(s.p_c);
        double x4 = (h4 - sat.h_f) / (sat.h_g - sat.h_f);
        x4 = std::clamp(x4, 1e-6, 1.0 - 1e-6);
        return props_.mean_void_fraction(s.evap.p_e, x4);
    };

    const int nz = output_mode ? 8 : 6;
    auto unpack = [&](const ss::Vector& z) {
        PlantState s = PlantState::from_vector(z.head(6));
        PlantInputs u = output_mode ? PlantInputs{z[6], z[7]} : *target.inputs;
        return std::make_pair(s, u);
    };

    auto residual = [&](const ss::Vector& z) {
        auto [s, u] = unpack(z);
        if (s.evap.zeta1 < 0.01 || s.evap.zeta1 > 0.99)
            throw std::invalid_argument("trim iterate: zone boundary out of range");
        if (output_mode && (u.n_c < 0.0 || u.alpha < 0.5 || u.alpha > 100.0))
            throw std::invalid_argument("trim iterate: actuator out of range");
        const FullRhs r = rhs_g(s, u, v, live_gamma(s));
        ss::Vector res(nz);
        res.head(6) = r.xdot.cwiseQuotient(xs);
        if (output_mode) {
            const ss::Vector y = outputs(s, 0.0, false);
            res[6] = (y[0] - target.outputs->first) / xs[1];
            res[7] = (y[1] - target.outputs->second) / 25.0;
        }
        return res;
    };

    // Physics-guided seed: assume a mid-range pressure and a 15 C
    // superheat, then set the wall temperatures to their per-zone algebraic
    // balance and the condenser pressure to its static map.
    ss::Vector z0(nz);
    {
        const double p_e0 = output_mode ? target.outputs->first : 260.0;
        const double sh0 = output_mode ? target.outputs->second : 15.0;
        const auto sat = props_.sat_props(p_e0);
        const double cp = vapor_cp(p_e0);
        const double h_e20 = sat.h_g + sh0 * cp;
        PlantInputs u0 = output_mode ? PlantInputs{1000.0, 40.0} : *target.inputs;
        double p_c0 = params_.p_c0;
        for (int i = 0; i < 2; ++i) {
            const double mc = compressor_flow(p_e0, h_e20, p_c0, u0.n_c).first;
            p_c0 = std::clamp(condenser_target(mc, v.t_ca_in), props_.p_min() + 1.0,
                              props_.p_max() - 1.0);
        }
        const double a_air =
            params_.alpha_air * std::pow(v.mdot_ea / params_.mdot_ea0, params_.air_flow_exp) *
            params_.a_o;
        const double b_tp = params_.alpha_tp * params_.a_i;
        const double b_sh = params_.alpha_sh * params_.a_i;
        const double t_sh_mean = sat.t_sat + 0.5 * sh0 * 0.5;  // rough mid-zone temperature
        z0.head(6) << 0.75, p_e0, h_e20,
            (a_air * v.t_ea_in + b_tp * sat.t_sat) / (a_air + b_tp),
            (a_air * v.t_ea_in + b_sh * t_sh_mean) / (a_air + b_sh), p_c0;
        if (output_mode) z0.tail(2) << u0.n_c, u0.alpha;
    }

    ss::Vector scales(nz);
    scales.head(6) = xs;
    if (output_mode) scales.tail(2) << 500.0, 25.0;

    ss::Vector z = z0;
    double rnorm = std::numeric_limits<double>::infinity();
    int it = 0;
    try {
        ss::Vector r = residual(z);
        rnorm = r.lpNorm<Eigen::Infinity>();
        for (; it < 100 && rnorm > 1e-11; ++it) {
            const ss::Matrix jac = ss::fd_jacobian(residual, z, scales);
            const ss::Vector dz = jac.colPivHouseholderQr().solve(-r);
            double lambda = 1.0;
            bool accepted = false;
            for (int back = 0; back < 30; ++back, lambda *= 0.5) {
                const ss::Vector z_try = z + lambda * dz;
                try {
                    const ss::Vector r_try = residual(z_try);
                    const double n_try = r_try.lpNorm<Eigen::Infinity>();
                    if (n_try < rnorm * (1.0 - 1e-4 * lambda) || n_try < 1e-12) {
                        z = z_try;
                        r = r_try;
                        rnorm = n_try;
                        accepted = true;
                        break;
                    }
                } catch (const std::exception&) {
                    // Step left the model's validity region; shorten it.
                }
            }
            if (!accepted) break;
        }
    } catch (const std::exception& e) {
        // The search itself left the model's validity region (property
        // envelope, zone bounds): no equilibrium was found.
        throw NoConvergence(std::string("trim: search failed: ") + e.what());
    }
    if (!(rnorm <= 1e-8))
        throw NoConvergence("trim: scaled derivative norm " + fmt(rnorm) +
                            " after " + std::to_string(it) + " iterations");

    TrimResult out;
    std::tie(out.x, out.u) = unpack(z);
    out.gamma_bar = live_gamma(out.x);
    out.residual = rnorm;
    out.iterations = it;
    freeze_void_fraction(out.gamma_bar);
    return out;
}

ss::StateSpace Plant::linearize(const PlantState& x, const PlantInputs& u,
                                const Boundary& v, bool with_wall_temp) const {
    const ss::Vector xs = state_scales();
    const ss::Vector x0 = x.to_vector();
    {
        const ss::Vector xdot = rhs(x, u, v).xdot;
        const double res = xdot.cwiseQuotient(xs).lpNorm<Eigen::Infinity>();
        if (!(res <= 1e-6))
            throw NotAtEquilibrium("linearize: scaled derivative norm " + fmt(res) +
                                   " exceeds 1e-6");
    }

    // Exogenous columns: actuators, disturbances, then faults.  The speed
    // fault shares the physical path of the speed command; the pressure
    // fault reaches only the measurement.
    auto apply = [&](const ss::Vector& q) {
        PlantInputs uu{u.n_c + q[0] + q[4], u.alpha + q[1]};
        Boundary vv = v;
        vv.mdot_ea += q[2];
        vv.t_ea_in += q[3];
        return std::make_pair(uu, vv);
    };
    ss::Vector q0 = ss::Vector::Zero(6);
    ss::Vector qs(6);
    qs << 500.0, 25.0, 0.05, 5.0, 500.0, 5.0;

    const ss::Matrix a =
        ss::fd_jacobian([&](const ss::Vector& xv) {
            return rhs(PlantState::from_vector(xv), u, v).xdot;
        }, x0, xs);
    const ss::Matrix b = ss::fd_jacobian([&](const ss::Vector& q) {
        auto [uu, vv] = apply(q);
        return rhs(x, uu, vv).xdot;
    }, q0, qs);
    const ss::Matrix c =
        ss::fd_jacobian([&](const ss::Vector& xv) {
            return outputs(PlantState::from_vector(xv), 0.0, with_wall_temp);
        }, x0, xs);
    ss::Matrix d = ss::Matrix::Zero(c.rows(), 6);
    d(0, 5) = 1.0;  // additive pressure-measurement fault

    ss::StateSpace g(a, b, c, d);
    g.inputs = {{"u", 2}, {"d", 2}, {"f", 2}};
    g.outputs = {{"y", static_cast<int>(c.rows())}};
    g.validate();
    return g;
}

Stepper::Stepper(const Plant& plant, double dt, int jac_refresh)
    : plant_(&plant), dt_(dt), jac_refresh_(jac_refresh) {
    if (dt <= 0.0) throw std::invalid_argument("Stepper: dt must be positive");
    if (jac_refresh < 1) throw std::invalid_argument("Stepper: refresh interval must be >= 1");
}

void Stepper::reset() { steps_since_jac_ = -1; }

PlantState Stepper::step(const PlantState& x, const PlantInputs& u_cmd,
                         const Boundary& v, const Faults& faults) {
    // Faults act on the realized actuator values; physical limits clamp.
    PlantInputs u_act;
    u_act.n_c = std::max(0.0, u_cmd.n_c + faults.f_n);
    u_act.alpha = std::clamp(u_cmd.alpha, 0.0, 100.0);

    const ss::Vector xv = x.to_vector();
    auto g = [&](const ss::Vector& s) {
        return plant_->rhs(PlantState::from_vector(s), u_act, v).xdot;
    };

    if (steps_since_jac_ < 0 || steps_since_jac_ >= jac_refresh_) {
        jac_ = ss::fd_jacobian(g, xv, state_scales());
        const ss::Matrix w = ss::Matrix::Identity(6, 6) - dt_ * kRosGamma * jac_;
        w_lu_.compute(w);
        steps_since_jac_ = 0;
    }
    ++steps_since_jac_;

    const ss::Vector f1 = g(xv);
    const ss::Vector k1 = w_lu_.solve(f1);
    const ss::Vector f2 = g(xv + dt_ * k1);
    const ss::Vector k2 = w_lu_.solve(f2 - 2.0 * kRosGamma * dt_ * (jac_ * k1));
    const ss::Vector x_next = xv + 0.5 * dt_ * (k1 + k2);

    PlantState next = PlantState::from_vector(x_next);
    const double eps = plant_->params().zone_eps;
    if (!(next.evap.zeta1 > eps && next.evap.zeta1 < 1.0 - eps))
        throw ZoneCollapse("step: zone boundary " + fmt(next.evap.zeta1) +
                           " left (" + fmt(eps) + ", " + fmt(1.0 - eps) + ")");
    // Fail here, not on the next derivative evaluation, if the state left
    // the property envelope or the outlet dropped out of the vapor region.
    const auto sat = plant_->props().sat_props(next.evap.p_e);
    plant_->props().sat_props(next.p_c);
    if (next.evap.h_e2 < sat.h_g - 1e-9)
        throw props::NotSuperheated("step: outlet enthalpy " + fmt(next.evap.h_e2) +
                                    " kJ/kg fell below saturation " + fmt(sat.h_g));
    return next;
}

}  // namespace ftc::plant
