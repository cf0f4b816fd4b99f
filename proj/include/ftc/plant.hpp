#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "ftc/props.hpp"
#include "ftc/state_space.hpp"

namespace ftc::plant {

// Thrown when the 4x4 refrigerant balance block is numerically singular
// (condition number above 1e12), which means the descriptor form has
// degenerated and no state derivative can be trusted.
struct SingularZ : std::runtime_error {
    explicit SingularZ(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the two-phase zone boundary leaves (eps, 1 - eps): the
// moving-boundary model is invalid once a zone vanishes.
struct ZoneCollapse : std::runtime_error {
    explicit ZoneCollapse(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by trim when Newton fails to reach the residual tolerance.
struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by valve_flow when the upstream pressure is below the downstream.
struct NegativePressureDrop : std::runtime_error {
    explicit NegativePressureDrop(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by linearize when the supplied point is not an equilibrium.
struct NotAtEquilibrium : std::runtime_error {
    explicit NotAtEquilibrium(const std::string& what) : std::runtime_error(what) {}
};

// Geometric, efficiency, heat-transfer, and condenser-map parameters.
// Units: volumes m^3, areas m^2, heat-transfer coefficients kW/m^2 K,
// wall capacitances kJ/K, pressures kPa, flows kg/s, temperatures C.
struct PlantParams {
    double v_e = 2.0e-3;       // evaporator refrigerant volume
    double v_d = 3.4e-5;       // compressor displacement per revolution
    double eta_v = 0.92;       // volumetric efficiency at unit pressure ratio
    // Clearance re-expansion droop: eta_v_eff = eta_v (1 - c_cl (r^x_cl - 1))
    // with r the discharge/suction pressure ratio.  c_cl = 0 recovers a
    // constant volumetric efficiency.
    double c_cl = 0.12;
    double x_cl = 0.77;
    double eta_s = 0.70;       // isentropic efficiency
    double kappa = 0.0959;     // isentropic pressure-ratio exponent of the vapor
    double c_d = 0.80;         // valve discharge coefficient
    double a_v_max = 2.0e-6;   // valve flow area at 100 %
    double alpha_tp = 2.5;     // boiling-side heat-transfer coefficient
    double alpha_sh = 0.10;    // vapor-side heat-transfer coefficient
    double alpha_air = 0.08;   // air-side heat-transfer coefficient at mdot_ea0
    double air_flow_exp = 0.6; // air-side coefficient scales as (mdot/mdot0)^exp
    double a_i = 0.5;          // refrigerant-side tube area
    double a_o = 4.0;          // air-side (finned) area
    double c_w_tp = 2.0;       // two-phase-zone wall thermal capacitance
    double c_w_sh = 1.0;       // superheat-zone wall thermal capacitance
    double mdot_ea0 = 0.12;    // nominal evaporator air mass flow
    // Lumped condenser: first-order lag (tau_c) toward the affine map
    // p_c* = p_c0 + k_m (mdot_c - mdot_c0) + k_t (T_ca_in - t_ca0).
    double p_c0 = 1100.0;
    double mdot_c0 = 0.0277;
    double t_ca0 = 30.0;
    double k_m = 8000.0;
    double k_t = 12.0;
    double tau_c = 8.0;
    double dt_subcool = 5.0;   // fixed condenser exit subcooling
    double cp_liq = 1.40;      // liquid heat capacity for the subcool enthalpy
    double zone_eps = 0.01;    // zone-collapse guard on zeta1
};

// Commanded (or actual, after fault injection) actuator values.
struct PlantInputs {
    double n_c = 0.0;   // compressor speed, rpm
    double alpha = 0.0; // valve opening, percent
};

// Air-side boundary conditions; the evaporator air flow and inlet
// temperature act as unmeasured disturbances.
struct Boundary {
    double mdot_ea = 0.12;  // evaporator air mass flow, kg/s
    double t_ea_in = 30.0;  // evaporator air inlet temperature, C
    double mdot_ca = 0.30;  // condenser air mass flow (not used by the lumped map)
    double t_ca_in = 30.0;  // condenser air inlet temperature, C
};

// Additive faults: f_n acts on the realized compressor speed, f_p on the
// pressure measurement.
struct Faults {
    double f_n = 0.0;  // rpm
    double f_p = 0.0;  // kPa
};

// Evaporator states of the moving-boundary model.
struct EvapState {
    double zeta1 = 0.7;    // normalized two-phase tube length
    double p_e = 260.0;    // evaporator pressure, kPa
    double h_e2 = 410.0;   // superheat-zone outlet enthalpy, kJ/kg
    double t_e1w = 10.0;   // two-phase-zone wall temperature, C
    double t_e2w = 15.0;   // superheat-zone wall temperature, C
};

// Full simulation state: evaporator plus the lumped condenser pressure.
struct PlantState {
    EvapState evap;
    double p_c = 1100.0;  // condenser pressure, kPa

    ss::Vector to_vector() const;
    static PlantState from_vector(const ss::Vector& x);
};

// Descriptor-form right-hand side Z xdot = f over the five evaporator
// states, plus the flow/heat internals the balances were built from.
struct EvapRhs {
    ss::Matrix z;       // 5x5
    ss::Vector f;       // 5
    double mdot_12 = 0.0, qdot_tp = 0.0, qdot_sh = 0.0;
    double mdot_c = 0.0, mdot_v = 0.0;
    double h4 = 0.0;        // evaporator inlet enthalpy (isenthalpic valve)
    double x4 = 0.0;        // evaporator inlet quality
    double cond4 = 0.0;     // condition number of the 4x4 refrigerant block
};

// Explicit-form derivative of the full six-dimensional state with the
// evaporator internals attached.
struct FullRhs {
    ss::Vector xdot;    // 6
    EvapRhs evap;
    double p_c_target = 0.0;
};

struct TrimTarget {
    Boundary boundary;
    // Exactly one of the two must be set: fixed actuators, or output
    // targets (p_e kPa, superheat C) with the actuators freed.
    std::optional<PlantInputs> inputs;
    std::optional<std::pair<double, double>> outputs;  // (p_e, superheat)
};

struct TrimResult {
    PlantState x;
    PlantInputs u;
    double gamma_bar = 0.0;   // frozen mean void fraction at the trim
    double residual = 0.0;    // scaled infinity norm of xdot
    int iterations = 0;
};

// Scale of each state used for residual norms and finite differencing.
ss::Vector state_scales();

// Nonlinear plant: static compressor/valve maps, five-state moving-boundary
// evaporator in descriptor form, lumped condenser lag.  Stateful only
// through the frozen mean void fraction (set by trim or explicitly);
// independent instances never share mutable state.
class Plant {
public:
    Plant(PlantParams params, props::PropertyModel model);

    const PlantParams& params() const { return params_; }
    const props::PropertyModel& props() const { return props_; }

    // Mean void fraction is frozen between trims (its evolution law is not
    // part of the model); rhs evaluations use this stored value.
    void freeze_void_fraction(double gamma_bar);
    double frozen_void_fraction() const { return gamma_bar_; }

    // mdot_c = eta_v V_d rho_1 omega, omega = 2 pi N / 60; the discharge
    // enthalpy follows the isentropic rise scaled by 1/eta_s.
    // Returns (mdot_c, h_out).
    std::pair<double, double> compressor_flow(double p_suction_kpa, double h_suction,
                                              double p_discharge_kpa,
                                              double n_c_actual_rpm) const;

    // Vapor heat capacity at a given pressure (kJ/kg K), recovered from the
    // superheat temperature map.
    double vapor_cp(double p_kpa) const;

    // Orifice law mdot = C_d A(alpha) sqrt(2 rho_up dp); pressures in kPa
    // are converted to Pa under the root.  Throws NegativePressureDrop.
    double valve_flow(double alpha_pct, double p_up_kpa, double p_down_kpa,
                      double rho_up) const;

    // Static condenser pressure map (the lag target).
    double condenser_target(double mdot_c, double t_ca_in) const;

    // Condenser exit enthalpy h3 = h_f(p_c) - cp_liq dT_sc (equals the
    // evaporator inlet enthalpy across the isenthalpic valve).
    double liquid_outlet_enthalpy(double p_c_kpa) const;

    // Descriptor form over the evaporator states at given condenser
    // pressure.  Throws SingularZ, EnvelopeExceeded, NotSuperheated.
    EvapRhs evaporator_rhs(const EvapState& x, const PlantInputs& u_actual,
                           const Boundary& v, double p_c_kpa) const;

    // Full explicit derivative (solves the descriptor block).
    FullRhs rhs(const PlantState& x, const PlantInputs& u_actual,
                const Boundary& v) const;

    // Measurement map: y = [p_e + f_p, superheat] plus the superheat-zone
    // wall temperature when the augmented sensor set is enabled.
    ss::Vector outputs(const PlantState& x, double f_p, bool with_wall_temp) const;

    // Newton trim with damped line search; drives the scaled derivative
    // norm to <= 1e-8 (output-target mode also zeroes the output errors).
    // Also freezes the mean void fraction at the converged point.
    // Throws NoConvergence.
    TrimResult trim(const TrimTarget& target);

    // Continuous-time linearization at an equilibrium via central
    // finite differences.  Input channels: u (N_c, alpha), d (mdot_ea,
    // T_ea_in), f (f_N, f_p); outputs y (2 or 3).  f_N shares the N_c
    // column; f_p is a pure feedthrough to the pressure measurement.
    // Throws NotAtEquilibrium if the scaled derivative norm exceeds 1e-6.
    ss::StateSpace linearize(const PlantState& x, const PlantInputs& u,
                             const Boundary& v, bool with_wall_temp) const;

private:
    EvapRhs evaporator_rhs_g(const EvapState& x, const PlantInputs& u_actual,
                             const Boundary& v, double p_c_kpa, double gamma_bar) const;
    FullRhs rhs_g(const PlantState& x, const PlantInputs& u_actual, const Boundary& v,
                  double gamma_bar) const;

    PlantParams params_;
    props::PropertyModel props_;
    double gamma_bar_ = 0.93;
};

// Fixed-step linearly implicit (Rosenbrock W) order-2 integrator for the
// stiff plant dynamics.  The Jacobian is refreshed every jac_refresh steps;
// any W matrix preserves order 2, so a stale Jacobian only affects
// stability margins, not consistency.  Deterministic: identical inputs
// give bit-identical trajectories.
class Stepper {
public:
    Stepper(const Plant& plant, double dt, int jac_refresh = 25);

    double dt() const { return dt_; }

    // One step: applies f_n to the commanded speed, advances the state,
    // and enforces the zone-collapse and superheat-region guards.
    PlantState step(const PlantState& x, const PlantInputs& u_cmd,
                    const Boundary& v, const Faults& faults);

    // Drop the cached Jacobian (forces a refresh on the next step).
    void reset();

private:
    const Plant* plant_;
    double dt_ = 0.0;
    int jac_refresh_ = 25;
    int steps_since_jac_ = -1;
    ss::Matrix jac_;                        // cached d(xdot)/dx
    Eigen::PartialPivLU<ss::Matrix> w_lu_;  // cached LU of W = I - dt gamma J
};

}  // namespace ftc::plant
