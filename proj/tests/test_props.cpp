#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ftc/props.hpp"

using namespace ftc::props;

namespace {

struct SatRow {
    double t_c, p, rho_f, rho_g, h_f, h_g;
};

// Published R134a saturation rows inside the fit envelope (IIR reference
// state, h_f = 200 kJ/kg at 0 C); the fits must reproduce these.
const SatRow kSatRows[] = {
    {-10.0, 200.6, 1327.1, 10.041, 186.70, 392.66},
    {0.0, 292.8, 1294.8, 14.428, 200.00, 398.60},
    {10.0, 414.6, 1261.0, 20.226, 213.58, 404.32},
    {20.0, 571.7, 1225.3, 27.780, 227.47, 409.75},
    {30.0, 770.2, 1187.5, 37.535, 241.72, 414.82},
    {40.0, 1016.6, 1146.7, 50.085, 256.41, 419.43},
    {50.0, 1317.9, 1102.3, 66.272, 271.62, 423.44},
    {60.0, 1681.8, 1052.9, 87.379, 287.49, 426.63},
};

// Exact antiderivative oracle for the Zivi mean: with a = 1 - c,
//   mean over [x0, 1] of x/(a x + c) = 1/a + c ln(a x0 + c) / (a^2 (1 - x0)).
double zivi_closed_form(double c, double x0) {
    const double a = 1.0 - c;
    return 1.0 / a + c * std::log(a * x0 + c) / (a * a * (1.0 - x0));
}

double rel_gap(double got, double want) {
    return std::abs(got - want) / std::max(1e-12, std::abs(want));
}

}  // namespace

TEST_CASE("saturation fits reproduce the published table") {
    const PropertyModel m = PropertyModel::builtin();
    for (const SatRow& row : kSatRows) {
        const SaturationState s = m.sat_props(row.p);
        CHECK(std::abs(s.t_sat - row.t_c) <= 0.5);
        CHECK(std::abs(s.rho_f - row.rho_f) <= 2.0);
        CHECK(rel_gap(s.rho_g, row.rho_g) <= 1e-2);
        CHECK(std::abs(s.h_f - row.h_f) <= 0.5);
        CHECK(std::abs(s.h_g - row.h_g) <= 0.5);
    }
    // 293 kPa sits a hair above the 0 C row.
    CHECK(std::abs(m.sat_props(293.0).t_sat) <= 0.5);
}

TEST_CASE("medium operating pressure yields a finite physical state") {
    const SaturationState s = PropertyModel::builtin().sat_props(251.2);
    for (double v : {s.t_sat, s.rho_f, s.rho_g, s.h_f, s.h_g, s.d_t_sat_dp,
                     s.d_rho_f_dp, s.d_rho_g_dp, s.d_h_f_dp, s.d_h_g_dp})
        CHECK(std::isfinite(v));
    CHECK(s.rho_f > s.rho_g);
    CHECK(s.rho_g > 0.0);
    CHECK(s.h_g > s.h_f);
}

TEST_CASE("saturation derivatives match central differences") {
    const PropertyModel m = PropertyModel::builtin();
    for (int i = 0; i < 20; ++i) {
        const double p = 160.0 * std::pow(1950.0 / 160.0, i / 19.0);
        const double dp = 1e-5 * p;
        const SaturationState lo = m.sat_props(p - dp);
        const SaturationState hi = m.sat_props(p + dp);
        const SaturationState s = m.sat_props(p);
        const auto check = [&](double analytic, double flo, double fhi) {
            CHECK(rel_gap(analytic, (fhi - flo) / (2.0 * dp)) <= 1e-6);
        };
        check(s.d_t_sat_dp, lo.t_sat, hi.t_sat);
        check(s.d_rho_f_dp, lo.rho_f, hi.rho_f);
        check(s.d_rho_g_dp, lo.rho_g, hi.rho_g);
        check(s.d_h_f_dp, lo.h_f, hi.h_f);
        check(s.d_h_g_dp, lo.h_g, hi.h_g);
    }
}

TEST_CASE("superheated region is continuous at the phase boundary") {
    const PropertyModel m = PropertyModel::builtin();
    for (double p : {200.0, 300.0, 700.0, 1500.0}) {
        const SaturationState s = m.sat_props(p);
        const SuperheatState v = m.sh_props(p, s.h_g);
        CHECK(std::abs(v.t - s.t_sat) <= 1e-10);
        CHECK(rel_gap(v.rho, s.rho_g) <= 1e-12);
    }
}

TEST_CASE("superheat magnitude agrees with the published vapor heat capacity") {
    // Near 300 kPa the published cp of slightly superheated vapor is about
    // 0.90 kJ/kg K, so 20 kJ/kg above saturation sits about 22 C above T_sat.
    const PropertyModel m = PropertyModel::builtin();
    const SaturationState s = m.sat_props(300.0);
    const SuperheatState v = m.sh_props(300.0, s.h_g + 20.0);
    const double superheat = v.t - s.t_sat;
    CHECK(superheat > 0.0);
    CHECK(std::abs(superheat - 20.0 / 0.90) <= 2.0);
}

TEST_CASE("superheated density partials match central differences") {
    const PropertyModel m = PropertyModel::builtin();
    for (int i = 0; i < 20; ++i) {
        const double p = 200.0 * std::pow(1800.0 / 200.0, i / 19.0);
        for (int j = 0; j < 20; ++j) {
            const double dh_above = 0.5 + (40.0 - 0.5) * j / 19.0;
            const double h = m.sat_props(p).h_g + dh_above;
            const SuperheatState v = m.sh_props(p, h);
            const double dp = 1e-5 * p;
            const double dh = 1e-3;
            const double drho_dp =
                (m.sh_props(p + dp, h).rho - m.sh_props(p - dp, h).rho) / (2.0 * dp);
            const double drho_dh =
                (m.sh_props(p, h + dh).rho - m.sh_props(p, h - dh).rho) / (2.0 * dh);
            CHECK(rel_gap(v.d_rho_dp, drho_dp) <= 1e-6);
            CHECK(rel_gap(v.d_rho_dh, drho_dh) <= 1e-6);
        }
    }
}

TEST_CASE("fitted curves are monotone and physically ordered on a dense grid") {
    const PropertyModel m = PropertyModel::builtin();
    SaturationState prev = m.sat_props(m.p_min());
    for (int i = 1; i < 100; ++i) {
        const double p = m.p_min() * std::pow(m.p_max() / m.p_min(), i / 99.0);
        const SaturationState s = m.sat_props(p);
        CHECK(s.t_sat > prev.t_sat);
        CHECK(s.h_g > prev.h_g);
        // Vapor gets denser with pressure (specific volume shrinks).
        CHECK(s.rho_g > prev.rho_g);
        CHECK(s.rho_f < prev.rho_f);
        CHECK(s.rho_f > s.rho_g);
        CHECK(s.rho_g > 0.0);
        CHECK(s.h_g > s.h_f);
        prev = s;
    }
}

TEST_CASE("degenerate density ratio makes the void profile linear with mean one half") {
    CHECK(std::abs(zivi_mean_from_ratio(1.0, 0.0) - 0.5) <= 1e-12);
    // Linear profile over [x0, 1] averages (1 + x0)/2.
    CHECK(std::abs(zivi_mean_from_ratio(1.0, 0.3) - 0.65) <= 1e-12);
}

TEST_CASE("mean void fraction approaches one as the inlet quality approaches one") {
    const PropertyModel m = PropertyModel::builtin();
    CHECK(m.mean_void_fraction(300.0, 1.0 - 1e-9) >= 1.0 - 1e-6);
    CHECK(m.mean_void_fraction(300.0, 1.0 - 1e-9) <= 1.0 + 1e-12);
}

TEST_CASE("quadrature matches brute-force trapezoid and exact antiderivative") {
    const PropertyModel m = PropertyModel::builtin();
    const SaturationState s = m.sat_props(300.0);
    const double c = std::pow(s.rho_g / s.rho_f, 2.0 / 3.0);
    const double x0 = 0.2;
    // 10^4-interval trapezoid oracle.
    const int n = 10000;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double x = x0 + (1.0 - x0) * k / n;
        const double g = x / (x + c * (1.0 - x));
        acc += (k == 0 || k == n) ? 0.5 * g : g;
    }
    const double trap = acc / n;
    const double got = m.mean_void_fraction(300.0, x0);
    CHECK(std::abs(got - trap) <= 1e-6);
    CHECK(std::abs(got - zivi_closed_form(c, x0)) <= 1e-9);
}

TEST_CASE("mean void fraction is nondecreasing in inlet quality and stays in (0, 1]") {
    const PropertyModel m = PropertyModel::builtin();
    for (double p : {200.0, 600.0, 1600.0}) {
        double prev = 0.0;
        for (int i = 0; i < 20; ++i) {
            const double g = m.mean_void_fraction(p, i / 20.0);
            CHECK(g >= prev);
            CHECK(g > 0.0);
            CHECK(g <= 1.0);
            prev = g;
        }
    }
}

TEST_CASE("leaving the envelope or the vapor region raises typed errors") {
    const PropertyModel m = PropertyModel::builtin();
    CHECK_THROWS_AS(m.sat_props(149.9), EnvelopeExceeded);
    CHECK_THROWS_AS(m.sat_props(2000.1), EnvelopeExceeded);
    CHECK_NOTHROW(m.sat_props(150.0));
    CHECK_NOTHROW(m.sat_props(2000.0));
    const double hg = m.sat_props(300.0).h_g;
    CHECK_THROWS_AS(m.sh_props(300.0, hg - 0.001), NotSuperheated);
    CHECK_NOTHROW(m.sh_props(300.0, hg));
    CHECK_THROWS_AS(m.mean_void_fraction(300.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(m.mean_void_fraction(300.0, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(zivi_mean_from_ratio(0.0, 0.2), std::invalid_argument);
}

TEST_CASE("shipped coefficient file matches the compiled-in model exactly") {
    const PropertyModel file = PropertyModel::load(FTC_SOURCE_DIR "/data/r134a.props");
    const PropertyModel mem = PropertyModel::builtin();
    CHECK(file.p_min() == mem.p_min());
    CHECK(file.p_max() == mem.p_max());
    for (double p : {160.0, 251.2, 700.0, 1500.0, 1990.0}) {
        const SaturationState a = file.sat_props(p);
        const SaturationState b = mem.sat_props(p);
        CHECK(a.t_sat == b.t_sat);
        CHECK(a.rho_f == b.rho_f);
        CHECK(a.rho_g == b.rho_g);
        CHECK(a.h_f == b.h_f);
        CHECK(a.h_g == b.h_g);
        CHECK(a.d_t_sat_dp == b.d_t_sat_dp);
        const SuperheatState va = file.sh_props(p, a.h_g + 15.0);
        const SuperheatState vb = mem.sh_props(p, b.h_g + 15.0);
        CHECK(va.rho == vb.rho);
        CHECK(va.t == vb.t);
    }
}

TEST_CASE("malformed property files are rejected with context") {
    CHECK_THROWS_WITH_AS(PropertyModel::load("/nonexistent/nope.props"),
                         doctest::Contains("not readable"), std::runtime_error);
    const std::string tmp = "/tmp/ftc_props_bad_header.props";
    std::ofstream(tmp) << "not-a-props-file v9\ntsat 1 0\n";
    CHECK_THROWS_WITH_AS(PropertyModel::load(tmp),
                         doctest::Contains("unsupported header"), std::runtime_error);
    const std::string tmp2 = "/tmp/ftc_props_missing_key.props";
    std::ofstream(tmp2) << "r134a-props v1\nenvelope_kpa 150 2000\ntsat 1 0\n";
    CHECK_THROWS_WITH_AS(PropertyModel::load(tmp2), doctest::Contains("missing key"),
                         std::runtime_error);
    std::remove(tmp.c_str());
    std::remove(tmp2.c_str());
}
