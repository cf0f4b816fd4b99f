#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ftc::props {

// Thrown when a pressure leaves the calibrated fit envelope.  Extrapolating
// the fits would silently corrupt the balance-equation Jacobians, so leaving
// the envelope is a hard error.
struct EnvelopeExceeded : std::runtime_error {
    explicit EnvelopeExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the superheated-vapor queries when h < h_g(p).
struct NotSuperheated : std::runtime_error {
    explicit NotSuperheated(const std::string& what) : std::runtime_error(what) {}
};

// Saturation-line properties and their pressure derivatives at one pressure.
// Units: p kPa, temperatures C, densities kg/m3, enthalpies kJ/kg.
struct SaturationState {
    double p = 0.0;
    double t_sat = 0.0;
    double rho_f = 0.0, rho_g = 0.0;
    double h_f = 0.0, h_g = 0.0;
    double d_t_sat_dp = 0.0;
    double d_rho_f_dp = 0.0, d_rho_g_dp = 0.0;
    double d_h_f_dp = 0.0, d_h_g_dp = 0.0;
};

// Superheated-vapor state at (p, h) with the partials the balance matrix
// needs: density w.r.t. pressure (h fixed) and enthalpy (p fixed).
struct SuperheatState {
    double rho = 0.0;
    double t = 0.0;
    double d_rho_dp = 0.0;
    double d_rho_dh = 0.0;
};

// Polynomial property fits for the working fluid in t = ln(p / 1 kPa).
// Saturation curves are direct polynomials (vapor density in log space);
// the superheated region uses T = T_sat + (h - h_g)/cp_v(p) and a vapor
// density anchored to the saturation fits (continuous at h = h_g).
// Instances are immutable after construction and safe to share across
// threads.
class PropertyModel {
public:
    // Compiled-in coefficients, identical to data/r134a.props.
    static PropertyModel builtin();
    // Parse a coefficient file (same format the generator writes).
    // Throws std::runtime_error on missing file, bad header, or bad keys.
    static PropertyModel load(const std::string& path);

    double p_min() const { return p_lo_; }
    double p_max() const { return p_hi_; }

    // Throws EnvelopeExceeded outside [p_min, p_max].
    SaturationState sat_props(double p_kpa) const;

    // Throws NotSuperheated when h is below the saturated-vapor enthalpy
    // (a 1e-9 kJ/kg grace absorbs roundoff at the phase boundary).
    SuperheatState sh_props(double p_kpa, double h_kj_kg) const;

    // Mean void fraction over quality x in [x_in, 1] with the Zivi slip
    // profile; requires 0 <= x_in < 1.
    double mean_void_fraction(double p_kpa, double x_in) const;

private:
    double p_lo_ = 0.0, p_hi_ = 0.0;
    double kelvin_ = 273.15;
    std::vector<double> tsat_, rho_f_, ln_rho_g_, h_f_, h_g_, cp_v_;

    void check_envelope(double p_kpa) const;
    void check_complete() const;
};

// Mean over x in [x_in, 1] of the Zivi void-fraction profile
//   gamma(x) = x / (x + c (1 - x)),   c = (rho_g / rho_f)^(2/3),
// by fixed-order quadrature.  Exposed separately so tests can force
// degenerate density ratios (c = 1 makes the profile linear, mean 0.5).
double zivi_mean_from_ratio(double c, double x_in);

}  // namespace ftc::props
