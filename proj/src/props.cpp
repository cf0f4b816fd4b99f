#include "ftc/props.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ftc::props {

namespace {

double polyval(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
}

// Derivative of the polynomial w.r.t. t evaluated at t.
double polyder(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (size_t k = c.size(); k-- > 1;) acc = acc * t + c[k] * static_cast<double>(k);
    return acc;
}

struct QuadratureNode {
    double x, w;
};

// 32-point Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on the
// Legendre recurrence (deterministic to machine precision).
const std::array<QuadratureNode, 32>& gauss_legendre_32() {
    static const std::array<QuadratureNode, 32> rule = [] {
        constexpr int n = 32;
        std::array<QuadratureNode, 32> out{};
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            out[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return out;
    }();
    return rule;
}

}  // namespace

double zivi_mean_from_ratio(double c, double x_in) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("zivi_mean_from_ratio: density ratio must be positive");
    if (!(x_in >= 0.0) || !(x_in < 1.0))
        throw std::invalid_argument("zivi_mean_from_ratio: inlet quality must lie in [0, 1)");
    // Mean over [x_in, 1] = (half width) * sum w_i gamma(x_i) / (1 - x_in)
    // and the half width is (1 - x_in)/2, so the interval length cancels.
    const double half = 0.5 * (1.0 - x_in);
    const double mid = 0.5 * (1.0 + x_in);
    double acc = 0.0;
    for (const auto& node : gauss_legendre_32()) {
        const double x = mid + half * node.x;
        acc += node.w * x / (x + c * (1.0 - x));
    }
    return 0.5 * acc;
}

void PropertyModel::check_envelope(double p) const {
    if (!(p >= p_lo_) || !(p <= p_hi_)) {
        std::ostringstream os;
        os << "pressure " << p << " kPa outside calibrated envelope [" << p_lo_
           << ", " << p_hi_ << "] kPa";
        throw EnvelopeExceeded(os.str());
    }
}

SaturationState PropertyModel::sat_props(double p) const {
    check_envelope(p);
    const double t = std::log(p);
    SaturationState s;
    s.p = p;
    s.t_sat = polyval(tsat_, t);
    s.rho_f = polyval(rho_f_, t);
    s.rho_g = std::exp(polyval(ln_rho_g_, t));
    s.h_f = polyval(h_f_, t);
    s.h_g = polyval(h_g_, t);
    // d/dp = (d/dt) / p for every fit in t = ln p.
    s.d_t_sat_dp = polyder(tsat_, t) / p;
    s.d_rho_f_dp = polyder(rho_f_, t) / p;
    s.d_rho_g_dp = s.rho_g * polyder(ln_rho_g_, t) / p;
    s.d_h_f_dp = polyder(h_f_, t) / p;
    s.d_h_g_dp = polyder(h_g_, t) / p;
    return s;
}

SuperheatState PropertyModel::sh_props(double p, double h) const {
    check_envelope(p);
    const double t = std::log(p);
    const double hg = polyval(h_g_, t);
    if (h < hg - 1e-9) {
        std::ostringstream os;
        os << "enthalpy " << h << " kJ/kg below saturated vapor " << hg
           << " kJ/kg at " << p << " kPa";
        throw NotSuperheated(os.str());
    }
    const double cp = polyval(cp_v_, t);
    const double ts = polyval(tsat_, t);
    const double temp = ts + (h - hg) / cp;
    const double tk = temp + kelvin_;
    const double tsk = ts + kelvin_;
    const double rg = std::exp(polyval(ln_rho_g_, t));

    SuperheatState o;
    o.t = temp;
    // Vapor density anchored at saturation: rho = rho_g(p) T_sat_K / T_K.
    o.rho = rg * tsk / tk;
    o.d_rho_dh = -o.rho / (cp * tk);
    const double d_ts = polyder(tsat_, t) / p;
    const double d_hg = polyder(h_g_, t) / p;
    const double d_cp = polyder(cp_v_, t) / p;
    const double d_rg = rg * polyder(ln_rho_g_, t) / p;
    // T(p, h) = T_sat + (h - h_g)/cp with h held fixed.
    const double d_temp = d_ts - d_hg / cp - (h - hg) * d_cp / (cp * cp);
    o.d_rho_dp = d_rg * tsk / tk + rg * d_ts / tk - rg * tsk * d_temp / (tk * tk);
    return o;
}

double PropertyModel::mean_void_fraction(double p, double x_in) const {
    const SaturationState s = sat_props(p);
    const double c = std::pow(s.rho_g / s.rho_f, 2.0 / 3.0);
    return zivi_mean_from_ratio(c, x_in);
}

void PropertyModel::check_complete() const {
    if (!(p_lo_ > 0.0) || !(p_hi_ > p_lo_))
        throw std::runtime_error("property model: bad pressure envelope");
    for (const auto* c : {&tsat_, &rho_f_, &ln_rho_g_, &h_f_, &h_g_, &cp_v_})
        if (c->empty()) throw std::runtime_error("property model: missing coefficient set");
}

PropertyModel PropertyModel::builtin() {
    PropertyModel m;
    m.p_lo_ = 150.0;
    m.p_hi_ = 2000.0;
    m.tsat_ = {-91.744881251698629, 7.3430797050925314, 1.7923184098267329,
               -0.16703110900158941, 0.021934108048598494};
    m.rho_f_ = {501.40417595844684, 807.78517643462692, -247.1359602690051,
                31.980930195628069, -1.6165697582233685};
    m.ln_rho_g_ = {-0.16402159366426308, -1.0312379366521989, 0.57675593572566686,
                   -0.075120446396915119, 0.0036994129100668409};
    m.h_f_ = {216.8984707229923, -95.85906616554756, 33.102914577822162,
              -4.2548281263815113, 0.22997640005816608};
    m.h_g_ = {159.08910648572467, 148.36857254908836, -41.134301453457404,
              5.4077102499112524, -0.25668445505617438};
    m.cp_v_ = {-4.6026225187708452, 3.1048417344963015, -0.59724285922677445,
               0.038791162533246396};
    m.kelvin_ = 273.15;
    m.check_complete();
    return m;
}

PropertyModel PropertyModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("property file not readable: " + path);

    PropertyModel m;
    std::map<std::string, std::vector<double>> sets;
    bool header_seen = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "r134a-props v1")
                throw std::runtime_error("property file " + path +
                                         ": unsupported header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "envelope_kpa") {
            if (!(ls >> m.p_lo_ >> m.p_hi_))
                throw std::runtime_error("property file: bad envelope line");
            continue;
        }
        size_t count = 0;
        if (!(ls >> count))
            throw std::runtime_error("property file: bad count for key '" + key + "'");
        std::vector<double> c(count);
        for (auto& v : c)
            if (!(ls >> v))
                throw std::runtime_error("property file: short coefficient list for '" +
                                         key + "'");
        sets[key] = std::move(c);
    }
    if (!header_seen) throw std::runtime_error("property file " + path + ": empty");

    auto take = [&](const char* key) {
        auto it = sets.find(key);
        if (it == sets.end())
            throw std::runtime_error("property file: missing key '" + std::string(key) + "'");
        return it->second;
    };
    m.tsat_ = take("tsat");
    m.rho_f_ = take("rho_f");
    m.ln_rho_g_ = take("rho_g");
    m.h_f_ = take("h_f");
    m.h_g_ = take("h_g");
    m.cp_v_ = take("t_sh");
    const std::vector<double> rho_sh = take("rho_sh");
    if (rho_sh.size() != 1)
        throw std::runtime_error("property file: rho_sh must hold one value");
    m.kelvin_ = rho_sh[0];
    m.check_complete();
    return m;
}

}  // namespace ftc::props
